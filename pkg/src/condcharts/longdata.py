"""Longitudinal data model, lagged design construction, CSV ingestion.

A dataset is a collection of subjects, each carrying strictly
increasing measurement times, the measurements themselves, and one
covariate row per measurement.  For a lag order ``p`` every subject
contributes one design row per measurement index ``j = p+1 .. m_i``;
shorter subjects contribute nothing.  Each row pairs a B-spline basis
vector at the current time with the lagged regressors

    (Y_{j-1}, D_1 Y_{j-1}, ..., Y_{j-p}, D_p Y_{j-p}, X_j)

where ``D_k`` is the time distance to the k-th prior measurement.

The CSV format is one observation per row with header
``subject,t,y,x1,...,xl``; ``#`` starts a comment line and rows need
not be pre-sorted.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError, ParseError
from .splines import basis_dimension, basis_matrix

__all__ = [
    "Subject",
    "Dataset",
    "DesignSystem",
    "time_distances",
    "build_design",
    "drop_covariates",
    "load_csv",
    "save_csv",
]


def _frozen(array, dtype=float, ndim=1):
    out = np.asarray(array, dtype=dtype)
    if out.ndim != ndim:
        raise InputError(f"expected a {ndim}-d array, got shape {out.shape}")
    out = np.ascontiguousarray(out)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Subject:
    """One individual's ordered measurements and covariate rows."""

    id: str
    times: np.ndarray
    values: np.ndarray
    covariates: np.ndarray

    def __post_init__(self):
        times = _frozen(self.times)
        values = _frozen(self.values)
        cov = np.asarray(self.covariates, dtype=float)
        if cov.ndim == 1:
            cov = cov.reshape(len(times), -1) if cov.size else cov.reshape(len(times), 0)
        cov = np.ascontiguousarray(cov)
        cov.setflags(write=False)
        if times.size < 1:
            raise InputError(f"subject {self.id!r} has no measurements")
        if values.shape != times.shape or cov.shape[0] != times.size:
            raise InputError(f"subject {self.id!r} has ragged fields")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))
                and np.all(np.isfinite(cov))):
            raise InputError(f"subject {self.id!r} has non-finite entries")
        if np.any(np.diff(times) <= 0):
            raise InputError(f"subject {self.id!r} times are not strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "covariates", cov)

    @property
    def n_measurements(self):
        return self.times.size

    @staticmethod
    def unchecked(id, times, values, covariates):
        """Skip validation; for generators whose output is valid by
        construction (simulation, bootstrap resampling)."""
        s = object.__new__(Subject)
        object.__setattr__(s, "id", id)
        object.__setattr__(s, "times", times)
        object.__setattr__(s, "values", values)
        object.__setattr__(s, "covariates", covariates)
        return s


@dataclass(frozen=True)
class Dataset:
    """Subjects sharing a common covariate dimension ``l``."""

    subjects: tuple
    l: int = None

    def __post_init__(self):
        subjects = tuple(self.subjects)
        dims = {s.covariates.shape[1] for s in subjects}
        if len(dims) > 1:
            raise InputError(f"subjects disagree on covariate dimension: {sorted(dims)}")
        l = self.l
        if l is None:
            if not dims:
                raise InputError("empty dataset needs an explicit covariate dimension")
            l = dims.pop()
        elif dims and dims.pop() != l:
            raise InputError("declared covariate dimension does not match subjects")
        ids = [s.id for s in subjects]
        if len(set(ids)) != len(ids):
            raise InputError("subject ids are not unique")
        object.__setattr__(self, "subjects", subjects)
        object.__setattr__(self, "l", int(l))

    @property
    def n_subjects(self):
        return len(self.subjects)

    @staticmethod
    def unchecked(subjects, l):
        """Skip validation; see :meth:`Subject.unchecked`."""
        ds = object.__new__(Dataset)
        object.__setattr__(ds, "subjects", subjects)
        object.__setattr__(ds, "l", l)
        return ds

    def all_times(self):
        if not self.subjects:
            return np.empty(0)
        return np.concatenate([s.times for s in self.subjects])


@dataclass(frozen=True)
class DesignSystem:
    """Assembled spline block, lagged linear block and response."""

    spline_block: np.ndarray
    linear_block: np.ndarray
    response: np.ndarray
    subject_ids: tuple
    row_subject: np.ndarray
    row_j: np.ndarray

    def __post_init__(self):
        for name in ("spline_block", "linear_block", "response",
                     "row_subject", "row_j"):
            arr = np.ascontiguousarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.response.shape[0]
        if self.spline_block.shape[0] != n or self.linear_block.shape[0] != n:
            raise InputError("design blocks have mismatched row counts")

    @property
    def n_rows(self):
        return self.response.shape[0]

    @property
    def n_subjects(self):
        return len(self.subject_ids)

    @property
    def row_index(self):
        """Per-row (subject id, measurement index j) pairs, j 1-based."""
        return tuple(
            (self.subject_ids[s], int(j))
            for s, j in zip(self.row_subject, self.row_j)
        )


def time_distances(subject, j, p):
    """Distances from measurement ``j`` (1-based) to its p predecessors."""
    if p < 0:
        raise InputError("lag order must be nonnegative")
    if not (p + 1 <= j <= subject.n_measurements):
        raise IndexError(
            f"measurement index j={j} needs p+1 <= j <= m"
            f" (p={p}, m={subject.n_measurements})")
    t = subject.times
    return np.array([t[j - 1] - t[j - 1 - k] for k in range(1, p + 1)])


def build_design(dataset, p, spec):
    """Assemble the lagged design for lag order ``p`` and spline spec.

    Subjects with fewer than ``p + 1`` measurements contribute no rows.
    Raises :class:`DomainError`, naming the subject and measurement
    index, if a usable time falls outside the spline domain.
    """
    if p < 0:
        raise InputError("lag order must be nonnegative")
    used = [s for s in dataset.subjects if s.n_measurements > p]
    kn = basis_dimension(spec)
    l = dataset.l
    d_lin = 2 * p + l
    if not used:
        empty = DesignSystem(
            np.empty((0, kn)), np.empty((0, d_lin)), np.empty(0),
            (), np.empty(0, dtype=int), np.empty(0, dtype=int))
        return empty

    times = np.concatenate([s.times for s in used])
    values = np.concatenate([s.values for s in used])
    covs = np.concatenate([s.covariates for s in used], axis=0)
    m = np.array([s.n_measurements for s in used])
    offsets = np.concatenate([[0], np.cumsum(m)[:-1]])
    local = np.arange(times.size) - np.repeat(offsets, m)
    rows = np.flatnonzero(local >= p)

    for s, j in _domain_violations(used, rows, times, local, spec):
        raise DomainError(
            f"subject {s!r}, measurement j={j}: time outside the spline "
            f"domain [{spec.t_lower!r}, {spec.t_upper!r}]")

    linear = np.empty((rows.size, d_lin))
    for k in range(1, p + 1):
        linear[:, 2 * (k - 1)] = values[rows - k]
        linear[:, 2 * (k - 1) + 1] = (times[rows] - times[rows - k]) * values[rows - k]
    if l:
        linear[:, 2 * p:] = covs[rows]

    return DesignSystem(
        basis_matrix(spec, times[rows]),
        linear,
        values[rows],
        tuple(s.id for s in used),
        np.repeat(np.arange(len(used)), np.maximum(m - p, 0)),
        (local[rows] + 1).astype(int),
    )


def _domain_violations(used, rows, times, local, spec):
    t = times[rows]
    bad = ~((t >= spec.t_lower) & (t <= spec.t_upper))
    if not bad.any():
        return []
    row = rows[np.flatnonzero(bad)[0]]
    subj = int(np.searchsorted(
        np.cumsum([s.n_measurements for s in used]), row, side="right"))
    return [(used[subj].id, int(local[row]) + 1)]


def drop_covariates(dataset):
    """Copy of the dataset with the covariate columns removed."""
    subjects = tuple(
        Subject(s.id, s.times, s.values, np.empty((s.n_measurements, 0)))
        for s in dataset.subjects)
    return Dataset(subjects, l=0)


def load_csv(path):
    """Read a dataset from CSV (header ``subject,t,y,x1,...``).

    Rows are grouped by subject (first-appearance order) and sorted by
    time within subject.  Equal or missing values are parse errors
    carrying the offending line number.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return _parse_csv(fh)


def _parse_csv(fh):
    reader = csv.reader(fh)
    header = None
    header_line = 0
    for lineno, row in enumerate(reader, start=1):
        if _blank_or_comment(row):
            continue
        header = [c.strip() for c in row]
        header_line = lineno
        break
    if header is None:
        raise ParseError("missing header row")
    if header[:3] != ["subject", "t", "y"]:
        raise ParseError("header must start with subject,t,y", line=header_line)
    cov_names = header[3:]
    expected = [f"x{i}" for i in range(1, len(cov_names) + 1)]
    if cov_names != expected:
        raise ParseError(
            f"covariate columns must be x1..x{len(cov_names)}", line=header_line)
    l = len(cov_names)

    groups = {}
    order = []
    for lineno, row in enumerate(reader, start=header_line + 1):
        if _blank_or_comment(row):
            continue
        if len(row) != 3 + l:
            raise ParseError(
                f"expected {3 + l} fields, found {len(row)}", line=lineno)
        sid = row[0].strip()
        if not sid:
            raise ParseError("empty subject id", line=lineno)
        try:
            nums = [float(c) for c in row[1:]]
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        if not all(np.isfinite(nums)):
            raise ParseError("non-finite value", line=lineno)
        if sid not in groups:
            groups[sid] = []
            order.append(sid)
        groups[sid].append((nums[0], nums[1], nums[2:], lineno))

    subjects = []
    for sid in order:
        rows = sorted(groups[sid], key=lambda item: item[0])
        times = [r[0] for r in rows]
        for a, b in zip(rows, rows[1:]):
            if b[0] <= a[0]:
                raise ParseError(
                    f"subject {sid!r}: time {b[0]!r} does not increase",
                    line=b[3])
        subjects.append(Subject(
            sid,
            np.array(times),
            np.array([r[1] for r in rows]),
            np.array([r[2] for r in rows]).reshape(len(rows), l),
        ))
    return Dataset(tuple(subjects), l=l)


def _blank_or_comment(row):
    if not row:
        return True
    first = row[0].lstrip()
    return (first.startswith("#")
            or (len(row) == 1 and not first))


def save_csv(dataset, path):
    """Write a dataset in the CSV exchange format (exact round trip)."""
    text = dumps_csv(dataset)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def dumps_csv(dataset):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["subject", "t", "y"]
                    + [f"x{i}" for i in range(1, dataset.l + 1)])
    for s in dataset.subjects:
        for i in range(s.n_measurements):
            writer.writerow([s.id, repr(float(s.times[i])),
                             repr(float(s.values[i]))]
                            + [repr(float(v)) for v in s.covariates[i]])
    return buf.getvalue()
