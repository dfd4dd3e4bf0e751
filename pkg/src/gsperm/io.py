"""Trial data CSV files: header ``stage,arm,value``, one observation per row."""

import csv
import math

from .errors import InvalidDataError, ValidationError
from .stats import StageBlock, TrialData

__all__ = ["ingest_trial_csv", "read_trial_csv", "write_trial_csv"]

HEADER = ["stage", "arm", "value"]
ARMS = ("treatment", "control")


def read_trial_csv(fh, strict=True, name="<stream>"):
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise ValidationError(f"{name}: empty file") from None
    if [h.strip() for h in header] != HEADER:
        raise ValidationError(f"{name}:1: header must be exactly 'stage,arm,value'")
    arms = {}
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise ValidationError(f"{name}:{line}: expected 3 fields, got {len(row)}")
        stage_txt, arm, value_txt = (c.strip() for c in row)
        try:
            stage = int(stage_txt)
        except ValueError:
            raise ValidationError(f"{name}:{line}: stage {stage_txt!r} is not an integer") from None
        if stage < 1:
            raise ValidationError(f"{name}:{line}: stage must be >= 1")
        if arm not in ARMS:
            raise ValidationError(f"{name}:{line}: arm must be 'treatment' or 'control'")
        try:
            value = float(value_txt)
        except ValueError:
            raise ValidationError(f"{name}:{line}: value {value_txt!r} is not a number") from None
        if not math.isfinite(value):
            raise ValidationError(f"{name}:{line}: value {value_txt!r} is not finite")
        arms.setdefault(stage, {"treatment": [], "control": []})[arm].append(value)

    if not arms:
        raise ValidationError(f"{name}: no observations")
    stages = sorted(arms)
    if stages != list(range(1, len(stages) + 1)):
        missing = sorted(set(range(1, stages[-1] + 1)) - set(stages))
        raise InvalidDataError(f"{name}: stages must be contiguous from 1; missing {missing}")
    blocks = []
    for s in stages:
        t, c = arms[s]["treatment"], arms[s]["control"]
        if not t or not c:
            raise InvalidDataError(f"{name}: stage {s} lacks observations in one arm")
        blocks.append(StageBlock(t, c))
    if blocks[0].m < 2 or blocks[0].n < 2:
        raise InvalidDataError(f"{name}: stage 1 needs at least 2 observations per arm")
    return TrialData(tuple(blocks), strict=strict)


def ingest_trial_csv(path, strict=True):
    """Load a trial CSV file into :class:`TrialData`.

    Observations keep file order within each (stage, arm).

    Raises:
        ValidationError: malformed rows (with line number), non-contiguous
            stages, non-finite values, or an allocation ratio that varies
            across stages in strict mode.
    """
    with open(path, newline="") as fh:
        return read_trial_csv(fh, strict=strict, name=str(path))


def write_trial_csv(data, fh):
    """Write ``data`` so that :func:`read_trial_csv` reproduces it exactly."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(HEADER)
    for k, stage in enumerate(data.stages, start=1):
        for v in stage.treatment:
            writer.writerow([k, "treatment", repr(float(v))])
        for v in stage.control:
            writer.writerow([k, "control", repr(float(v))])
