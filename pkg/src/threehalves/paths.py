"""Containers for simulated paths."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["PathRecord", "PathBatch"]


@dataclass
class PathRecord:
    """One simulated path.

    ``s``, ``u`` and ``l`` are terminal values, or full outer-grid trajectories
    when the batch was simulated with ``keep_paths=True``.  ``tau`` is the first
    grid time with U <= delta, or the sentinel ``T + h`` when never hit.
    """

    s: float | np.ndarray
    u: float | np.ndarray
    l: float | np.ndarray
    tau: float
    survived: bool
    int_u: float


@dataclass
class PathBatch:
    """Struct-of-arrays view of ``N`` paths, indexed by path number.

    Attributes:
        s, u, l: terminal stock, inverse variance and likelihood weight, shape (N,).
        tau: stopping times, shape (N,).
        survived: ``tau > T`` flags, shape (N,).
        int_u: accumulated integral of 1/U up to ``T`` or the stopping time.
        T, h: horizon and outer step.
        s_path, u_path, l_path: optional (N, T/h + 1) outer-grid trajectories.
    """

    s: np.ndarray
    u: np.ndarray
    l: np.ndarray
    tau: np.ndarray
    survived: np.ndarray
    int_u: np.ndarray
    T: float
    h: float
    s_path: np.ndarray | None = None
    u_path: np.ndarray | None = None
    l_path: np.ndarray | None = None

    def __len__(self) -> int:
        return self.s.shape[0]

    @property
    def n_stopped(self) -> int:
        return int(np.count_nonzero(~self.survived))

    @property
    def times(self) -> np.ndarray:
        m = int(round(self.T / self.h))
        return np.linspace(0.0, self.T, m + 1)

    def record(self, j: int) -> PathRecord:
        trajectories = self.s_path is not None
        return PathRecord(
            s=self.s_path[j].copy() if trajectories else float(self.s[j]),
            u=self.u_path[j].copy() if trajectories else float(self.u[j]),
            l=self.l_path[j].copy() if trajectories else float(self.l[j]),
            tau=float(self.tau[j]),
            survived=bool(self.survived[j]),
            int_u=float(self.int_u[j]),
        )

    def records(self) -> list[PathRecord]:
        return [self.record(j) for j in range(len(self))]

    @classmethod
    def from_records(cls, records: list[PathRecord], T: float, h: float) -> PathBatch:
        """Build a batch from records; trajectories are kept if present."""

        def terminal(x):
            return float(np.asarray(x).reshape(-1)[-1])

        trajectories = bool(records) and np.ndim(records[0].s) > 0
        batch = cls(
            s=np.array([terminal(r.s) for r in records], dtype=float),
            u=np.array([terminal(r.u) for r in records], dtype=float),
            l=np.array([terminal(r.l) for r in records], dtype=float),
            tau=np.array([r.tau for r in records], dtype=float),
            survived=np.array([r.survived for r in records], dtype=bool),
            int_u=np.array([r.int_u for r in records], dtype=float),
            T=T,
            h=h,
        )
        if trajectories:
            batch.s_path = np.vstack([r.s for r in records])
            batch.u_path = np.vstack([r.u for r in records])
            batch.l_path = np.vstack([r.l for r in records])
        return batch

    @classmethod
    def concat(cls, parts: list[PathBatch]) -> PathBatch:
        first = parts[0]
        keep = first.s_path is not None
        return cls(
            s=np.concatenate([p.s for p in parts]),
            u=np.concatenate([p.u for p in parts]),
            l=np.concatenate([p.l for p in parts]),
            tau=np.concatenate([p.tau for p in parts]),
            survived=np.concatenate([p.survived for p in parts]),
            int_u=np.concatenate([p.int_u for p in parts]),
            T=first.T,
            h=first.h,
            s_path=np.concatenate([p.s_path for p in parts]) if keep else None,
            u_path=np.concatenate([p.u_path for p in parts]) if keep else None,
            l_path=np.concatenate([p.l_path for p in parts]) if keep else None,
        )
