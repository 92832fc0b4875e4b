"""The console's segment counter is checked against this same file;
this side guards that the file stays true to the codec."""

import json
from pathlib import Path

from announcer.smpp import segmentation

VECTORS = Path(__file__).resolve().parent.parent / "frontend" / "shared" / "segment-vectors.json"


def test_shared_vector_file_matches_codec():
    payloads = json.loads(VECTORS.read_text(encoding="utf-8"))["vectors"]
    assert len(payloads) == 20
    for vector in payloads:
        got = segmentation.segment(vector["text"], ref_num=1)
        assert got.encoding == vector["encoding"], vector["text"]
        assert len(got.segments) == vector["segments"], vector["text"]
