"""Byte-level mutators and the parser harness shared by the fuzz tests."""

import random

from lttext.converters import parse_totaltext
from lttext.errors import ParseError, SchemaError
from lttext.formats import parse_canonical, parse_detection_lines, parse_detections, parse_icdar_gt

CANONICAL = (
    b'{"schema_version":"1.0","dataset":{"name":"seed","split":"test","images":['
    b'{"image_id":"a","file_name":"a.jpg","width":100,"height":80,"source_dataset":"s","instances":['
    b'{"polygon":[[0,0],[10,0],[10,5],[0,5]],"care":true,"transcription":"hi","categories":["blurred"],'
    b'"word_level":true,"script":"latin"},'
    b'{"polygon":[[20,20],[30,20],[30,28.5],[20,28.5]],"care":false,"transcription":null,"categories":[],'
    b'"word_level":true,"script":"unknown"}]}]}}\n'
)
DETECTIONS = (
    b'{"schema_version":"1.0","detector":"d","results":[{"image_id":"a","polygons":'
    b'[[[0,0],[10,0],[10,5],[0,5]]],"scores":[0.9]}]}\n'
)
ICDAR = "\ufeff0,0,10,0,10,5,0,5,hello\r\n20,20,30,20,30,28,20,28,###\n1,1,9,1,9,4,1,4,café,bar\n".encode()
DET_LINES = b"0,0,10,0,10,5,0,5,0.93\n20,20,30,20,30,28,20,28\n"
TOTALTEXT = (b"x: [[115 503 494 115]], y: [[322 346 426 404]], ornt: [u'h'], transcriptions: [u'nauGHTY']\n"
             b"x: [[10 60 60 10]], y: [[10 10 40 40]], ornt: [u'#'], transcriptions: [u'#']\n")

SEEDS = {
    "canonical": CANONICAL,
    "detections": DETECTIONS,
    "icdar": ICDAR,
    "det_lines": DET_LINES,
    "totaltext": TOTALTEXT,
}

INTERESTING = [b"", b"0", b"-1", b"1e309", b"NaN", b"Infinity", b"null", b"true", b"[]", b"{}", b'"',
               b"###", b",", b"\xff", b"\xc3", b"\x00",
               b"\xef\xbb\xbf", b"9" * 400, b"[" * 3000, b"\r\n", b"-0", b"1.7", b"\\u0000", b'"\\ud800"']


def mutate(data: bytes, rng: random.Random) -> bytes:
    buf = bytearray(data)
    for _ in range(rng.randint(1, 4)):
        op = rng.randrange(7)
        pos = rng.randrange(len(buf) + 1) if buf else 0
        if op == 0 and buf:  # flip a bit
            i = rng.randrange(len(buf))
            buf[i] ^= 1 << rng.randrange(8)
        elif op == 1 and buf:  # delete a span
            j = min(len(buf), pos + rng.randint(1, 16))
            del buf[pos:j]
        elif op == 2:  # insert an interesting token
            buf[pos:pos] = rng.choice(INTERESTING)
        elif op == 3 and buf:  # duplicate a span
            j = min(len(buf), pos + rng.randint(1, 32))
            buf[pos:pos] = buf[pos:j]
        elif op == 4 and buf:  # replace a byte with a structural character
            i = rng.randrange(len(buf))
            buf[i] = rng.choice(b'{}[],:"0123456789.-e \n#')
        elif op == 5:  # truncate
            del buf[pos:]
        else:  # random bytes
            buf[pos:pos] = bytes(rng.randrange(256) for _ in range(rng.randint(1, 8)))
    return bytes(buf)


def run_parser(kind: str, data: bytes, strict: bool = True):
    if kind == "canonical":
        return parse_canonical(data, strict=strict)
    if kind == "detections":
        return parse_detections(data, "fuzz", strict=strict)
    if kind == "icdar":
        return parse_icdar_gt(data, "fuzz", strict=strict)
    if kind == "det_lines":
        return parse_detection_lines(data, "fuzz", strict=strict)
    return parse_totaltext(data, "fuzz", strict=strict)


def fuzz_one(kind: str, data: bytes, strict: bool = True) -> str:
    """'ok', 'ParseError' or 'SchemaError'; anything else propagates as a failure."""
    try:
        run_parser(kind, data, strict)
    except (ParseError, SchemaError) as exc:
        return type(exc).__name__
    return "ok"
