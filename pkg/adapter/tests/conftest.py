import json

import pytest


def script_video(frames, fps=30.0):
    return {"fps": fps, "frames": frames}


@pytest.fixture()
def hundred_frame_video(tmp_path):
    """Scripted clip: person in most frames, a car joining now and then."""
    frames = []
    for i in range(100):
        dets = []
        if i % 7 != 3:
            dets.append(["person", 0.5 + (i % 5) * 0.1, [10, 20, 50, 80]])
        if i % 11 == 0:
            dets.append(["car", 0.9])
            dets.append(["car", 0.7])  # second instance, lower score
        frames.append(dets)
    path = tmp_path / "clip.json"
    path.write_text(json.dumps(script_video(frames)))
    return path
