"""Design matrices for the named feature sets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from ..features import DenseEncoder, combine, fit_vocabulary, vectorize, window_dense_row
from ..sessionize import LabeledWindow
from .encoding import encode_role

# feature set -> (sequence vectorizer mode or None, dense context features, self-reported roles)
FEATURE_SETS = {
    "app_seq_cv": ("CV", False, False),
    "app_seq_tf": ("TF", False, False),
    "app_seq_tfidf": ("TFIDF", False, False),
    "features": (None, True, False),
    "features_plus_appseq": ("appseq", True, False),
    "features_plus_roles": (None, True, True),
}
ROLE_ENCODINGS = ("binary_pair", "ternary_onehot", "both")
ROLE_ORDER = ("private", "work", "both")


@dataclass
class WindowTable:
    """Per-window inputs computed once per participant and device scope."""
    sequences: list[list[str]]
    dense_rows: list[dict]
    roles: list[str]
    interruptibility: list[str]

    def __len__(self) -> int:
        return len(self.roles)

    def take(self, idx) -> "WindowTable":
        idx = [int(i) for i in idx]
        return WindowTable([self.sequences[i] for i in idx], [self.dense_rows[i] for i in idx],
                           [self.roles[i] for i in idx], [self.interruptibility[i] for i in idx])


def window_table(windows: Sequence[LabeledWindow], genres: Mapping[str, str] | None = None,
                 stopwords: frozenset | None = None) -> WindowTable:
    return WindowTable([w.apps for w in windows],
                       [window_dense_row(w, genres, stopwords) for w in windows],
                       [w.role for w in windows], [w.interruptibility for w in windows])


def role_features(roles: Sequence[str], encoding: str = "both") -> np.ndarray:
    """Role columns: the binary (private, work) pair and/or a ternary one-hot."""
    if encoding not in ROLE_ENCODINGS:
        raise ValueError(f"role encoding must be one of {ROLE_ENCODINGS}")
    blocks = []
    if encoding in ("binary_pair", "both"):
        blocks.append(np.array([encode_role(r) for r in roles], dtype=float).reshape(len(roles), 2))
    if encoding in ("ternary_onehot", "both"):
        blocks.append(np.array([[r == o for o in ROLE_ORDER] for r in roles], dtype=float)
                      .reshape(len(roles), 3))
    return np.hstack(blocks)


def role_feature_names(encoding: str = "both") -> list[str]:
    names = []
    if encoding in ("binary_pair", "both"):
        names += ["role_private", "role_work"]
    if encoding in ("ternary_onehot", "both"):
        names += [f"role={r}" for r in ROLE_ORDER]
    return names


def with_roles(X: sp.spmatrix, roles: Sequence[str], encoding: str = "both") -> sp.csr_matrix:
    return combine(X, sp.csr_matrix(role_features(roles, encoding)))


class FeatureBuilder:
    """Fits vocabulary and dense encodings on training windows, then transforms any windows.

    Role columns are not added here even for ``features_plus_roles``; callers
    append them with :func:`with_roles` from whichever role source applies.
    """

    def __init__(self, feature_set: str, appseq_mode: str = "TFIDF", standardize: bool = False):
        if feature_set not in FEATURE_SETS:
            raise ValueError(f"unknown feature set {feature_set!r}")
        self.feature_set = feature_set
        seq, self.dense, self.uses_roles = FEATURE_SETS[feature_set]
        self.seq_mode = appseq_mode if seq == "appseq" else seq
        self.standardize = standardize
        self.vocab = None
        self.encoder = None

    def fit(self, table: WindowTable) -> "FeatureBuilder":
        if self.seq_mode:
            self.vocab = fit_vocabulary(table.sequences)
        if self.dense:
            self.encoder = DenseEncoder.fit(table.dense_rows)
        return self

    def transform(self, table: WindowTable) -> sp.csr_matrix:
        n = len(table)
        X = sp.csr_matrix((n, 0))
        if self.vocab is not None:
            X = vectorize(table.sequences, self.vocab, self.seq_mode)
        if self.encoder is not None:
            X = combine(X, self.encoder.transform(table.dense_rows, self.standardize))
        return X

    @property
    def columns(self) -> list[str]:
        cols = [f"app:{a}" for a in self.vocab.apps] if self.vocab is not None else []
        if self.encoder is not None:
            cols += self.encoder.columns
        return cols
