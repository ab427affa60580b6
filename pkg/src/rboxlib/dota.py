"""Reading and writing DOTA-style annotation and detection files.

Annotation files carry optional header lines (e.g. "imagesource:...",
"gsd:...") followed by one object per line:

    x1 y1 x2 y2 x3 y3 x4 y4 category difficult

Detection files carry one scored box per line:

    image_id category score x1 y1 x2 y2 x3 y3 x4 y4

All parse errors report the 1-based line number.
"""

from dataclasses import dataclass
from pathlib import Path

from .errors import AnnotationParseError, RBoxError
from .evaluation import DetectionRecord, GroundTruthRecord
from .geometry import QuadBox, quad_to_longside

_HEADER_KEYS = ("imagesource", "gsd")


@dataclass(frozen=True)
class AnnotationRecord:
    """One annotated quadrilateral with its category and difficult flag."""

    quad: QuadBox
    category: str
    difficult: int  # 0, 1 or 2


def _parse_quad(tokens, line_number):
    try:
        coords = [float(t) for t in tokens]
    except ValueError as exc:
        raise AnnotationParseError(f"bad coordinate: {exc}", line_number) from None
    try:
        return QuadBox(tuple((coords[i], coords[i + 1]) for i in range(0, 8, 2)))
    except RBoxError as exc:
        raise AnnotationParseError(f"bad quad: {exc}", line_number) from None


def parse_dota_annotation(text):
    """Parse annotation text into a list of AnnotationRecord.

    Lines with fewer than 10 whitespace-separated tokens, or starting with
    a known header key, are skipped as metadata. Data lines with extra
    trailing tokens are accepted (the first 10 are used).

    Args:
        text: Full file contents.

    Returns:
        List of AnnotationRecord in file order.

    Raises:
        AnnotationParseError: malformed coordinates, degenerate quad, or a
            difficult value outside {0, 1, 2}; carries the line number.
    """
    records = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) < 10:
            continue
        if tokens[0].split(":")[0].lower() in _HEADER_KEYS:
            continue
        quad = _parse_quad(tokens[:8], lineno)
        category = tokens[8]
        try:
            difficult = int(tokens[9])
        except ValueError:
            raise AnnotationParseError(
                f"difficult flag must be an integer, got {tokens[9]!r}", lineno) from None
        if difficult not in (0, 1, 2):
            raise AnnotationParseError(
                f"difficult flag must be 0, 1 or 2, got {difficult}", lineno)
        records.append(AnnotationRecord(quad=quad, category=category,
                                        difficult=difficult))
    return records


def format_dota_annotation(records, header=None):
    """Serialize AnnotationRecords back to file text (inverse of the parser)."""
    lines = list(header) if header else []
    for rec in records:
        coords = " ".join(
            f"{v}" for xy in rec.quad.vertices for v in xy)
        lines.append(f"{coords} {rec.category} {rec.difficult}")
    return "\n".join(lines) + "\n"


def annotation_to_ground_truths(records, image_id):
    """Convert parsed annotations to evaluation ground truths.

    Quads become long-side boxes via the minimum enclosing rectangle;
    difficult values 1 and 2 both map to the difficult flag.
    """
    return [
        GroundTruthRecord(image_id=image_id, class_id=rec.category,
                          box=quad_to_longside(rec.quad),
                          difficult=rec.difficult > 0)
        for rec in records
    ]


def load_ground_truth_dir(directory):
    """Load every '<image_id>.txt' annotation file in a directory.

    Files are visited in sorted name order so the result is deterministic.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise AnnotationParseError(f"not a directory: {directory}")
    gts = []
    for path in sorted(directory.glob("*.txt")):
        try:
            records = parse_dota_annotation(path.read_text())
        except AnnotationParseError as exc:
            raise AnnotationParseError(f"{path.name}: {exc}") from None
        gts.extend(annotation_to_ground_truths(records, image_id=path.stem))
    return gts


def parse_detection_lines(text):
    """Parse detection text into DetectionRecords (boxes via min-area rect).

    Raises:
        AnnotationParseError: wrong token count or malformed fields, with
            the line number.
    """
    records = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 11:
            raise AnnotationParseError(
                f"expected 11 tokens (image_id category score x1..y4), "
                f"got {len(tokens)}", lineno)
        image_id, category = tokens[0], tokens[1]
        try:
            score = float(tokens[2])
        except ValueError:
            raise AnnotationParseError(
                f"bad score {tokens[2]!r}", lineno) from None
        quad = _parse_quad(tokens[3:11], lineno)
        records.append(DetectionRecord(image_id=image_id, class_id=category,
                                       score=score, box=quad_to_longside(quad)))
    return records


def load_detection_file(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise AnnotationParseError(f"cannot read {path}: {exc}") from None
    try:
        return parse_detection_lines(text)
    except AnnotationParseError as exc:
        raise AnnotationParseError(f"{path.name}: {exc}") from None
