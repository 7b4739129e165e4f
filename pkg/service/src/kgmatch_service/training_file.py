"""Reader for the pipeline's training-pair TSV format.

The format is the interface between the matching pipeline and this
service: a header line `textA textB label provenance source target`
(tab-separated), one example per row, with tabs, newlines, carriage
returns, and backslashes inside text fields backslash-escaped.  Labels
are 1 (match) or 0 (non-match).
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Union

TRAINING_TSV_HEADER = "textA\ttextB\tlabel\tprovenance\tsource\ttarget"


class TrainingFileError(ValueError):
    """The file is not a well-formed training TSV."""


@dataclass(frozen=True)
class TrainingExample:
    text_a: str
    text_b: str
    label: int  # 1 = match, 0 = non-match
    provenance: str
    source: str
    target: str


def unescape_field(text: str) -> str:
    out: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            out.append({"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}.get(nxt, "\\" + nxt))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def read_training_tsv(path: Union[str, Path]) -> list[TrainingExample]:
    examples: list[TrainingExample] = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != TRAINING_TSV_HEADER:
            raise TrainingFileError(f"{path}: unexpected training TSV header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 6:
                raise TrainingFileError(
                    f"{path}:{lineno}: expected 6 tab-separated fields, got {len(fields)}"
                )
            text_a, text_b, label, provenance, source, target = fields
            if label not in ("0", "1"):
                raise TrainingFileError(f"{path}:{lineno}: label must be 0 or 1, got {label!r}")
            examples.append(TrainingExample(
                text_a=unescape_field(text_a),
                text_b=unescape_field(text_b),
                label=int(label),
                provenance=provenance,
                source=source,
                target=target,
            ))
    return examples
