"""Reading and validating the pinned cavityspin CSV schema.

Every input file must start with `# cavityspin-csv v1 <kind>`; rendering
is a pure function of the CSV contents and fails loudly (SchemaError
naming the file and the offending column) on any mismatch.
"""

import glob
import os

import numpy as np

SCHEMA_VERSION = "cavityspin-csv v1"


class SchemaError(RuntimeError):
    """Missing input, wrong schema line, or missing column."""


def read_table(path, kind, required_columns=()):
    """Parse one pinned-schema CSV into {column: float array}."""
    if not os.path.exists(path):
        raise SchemaError(f"{path}: input file not found")
    with open(path) as f:
        first = f.readline().rstrip("\n")
        expected = f"# {SCHEMA_VERSION} {kind}"
        if first != expected:
            raise SchemaError(
                f"{path}: schema line {first!r} does not match {expected!r}")
        header = f.readline().rstrip("\n").split(",")
        for col in required_columns:
            if col not in header:
                raise SchemaError(f"{path}: missing column {col!r}")
        rows = []
        for lineno, line in enumerate(f, 3):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(header):
                raise SchemaError(
                    f"{path}:{lineno}: {len(parts)} fields, expected "
                    f"{len(header)}")
            try:
                rows.append([float(x) for x in parts])
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}")
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    data = np.asarray(rows)
    return {name: data[:, i] for i, name in enumerate(header)}


def read_qgrid(path, kind):
    """Parse a Q-function grid CSV into (axis1, axis2, values)."""
    cols = ("theta", "phi") if kind == "qgrid-spin" else ("re_alpha",
                                                          "im_alpha")
    table = read_table(path, kind, cols + ("value",))
    a1 = np.unique(table[cols[0]])
    a2 = np.unique(table[cols[1]])
    values = np.full((len(a1), len(a2)), np.nan)
    i = np.searchsorted(a1, table[cols[0]])
    j = np.searchsorted(a2, table[cols[1]])
    values[i, j] = table["value"]
    if np.any(np.isnan(values)):
        raise SchemaError(f"{path}: grid is not a complete product grid")
    return a1, a2, values


def resolve(input_dir, pattern):
    """All files matching one required-input pattern, sorted."""
    matches = sorted(glob.glob(os.path.join(input_dir, pattern)))
    if not matches:
        raise SchemaError(f"{input_dir}: no input matching {pattern!r}")
    return matches
