from pathlib import Path
from typing import Optional

import numpy as np
from scipy import sparse

from src.core import InputError
from src.helpers.io_helper import atomic_write_text, read_text
from src.models import ConeBlocks, ConicProblem

# Text layout, one section per block:
#   conic-problem n <n>
#   constant <r>
#   <name> <rows> <cols> <nnz>   followed by nnz lines "i j value"   (sparse matrices)
#   <name> <length>              followed by one value per line       (vectors)
#   dims <count>                 followed by one cone size per line


def _sparse_section(name: str, m: Optional[sparse.spmatrix], cols: int) -> list[str]:
    m = (sparse.csr_matrix((0, cols)) if m is None else m).tocoo()
    lines = [f"{name} {m.shape[0]} {m.shape[1]} {m.nnz}"]
    lines += [f"{i} {j} {v:.17g}" for i, j, v in zip(m.row, m.col, m.data)]
    return lines


def _vector_section(name: str, v) -> list[str]:
    v = np.asarray(v, dtype=float).reshape(-1)
    return [f"{name} {len(v)}"] + [f"{x:.17g}" for x in v]


def dump_problem(problem: ConicProblem, path: Path) -> Path:
    """Write a self-describing text dump for differential runs against other solvers."""
    n = problem.n
    cones = problem.cones
    lines = [f"conic-problem n {n}", f"constant {problem.r:.17g}"]
    lines += _sparse_section("P", problem.P, n)
    lines += _vector_section("q", problem.q)
    lines += _sparse_section("A", problem.A, n)
    lines += _vector_section("b", problem.b)
    lines += _sparse_section("G", problem.G, n)
    lines += _vector_section("h", problem.h)
    lines += [f"dims {cones.count}"] + [str(k) for k in cones.dims]
    lines += _sparse_section("M", cones.M, n)
    lines += _vector_section("m", cones.m)
    lines += _sparse_section("R", cones.R, n)
    lines += _vector_section("s", cones.s)
    return atomic_write_text(path, "\n".join(lines) + "\n")


class _Reader:
    def __init__(self, path: Path):
        self.path = path
        self.lines = read_text(path).splitlines()
        self.pos = 0

    def header(self, name: str) -> list[str]:
        if self.pos >= len(self.lines):
            raise InputError(f"{self.path}: missing section '{name}'")
        tokens = self.lines[self.pos].split()
        if not tokens or tokens[0] != name:
            raise InputError(f"{self.path}:{self.pos + 1}: expected section '{name}'")
        self.pos += 1
        return tokens[1:]

    def take(self, count: int) -> list[str]:
        chunk = self.lines[self.pos : self.pos + count]
        if len(chunk) != count:
            raise InputError(f"{self.path}: truncated dump")
        self.pos += count
        return chunk

    def sparse(self, name: str) -> sparse.csr_matrix:
        rows, cols, nnz = (int(t) for t in self.header(name))
        entries = [line.split() for line in self.take(nnz)]
        i = np.array([int(e[0]) for e in entries], dtype=np.int64)
        j = np.array([int(e[1]) for e in entries], dtype=np.int64)
        v = np.array([float(e[2]) for e in entries])
        return sparse.csr_matrix((v, (i, j)), shape=(rows, cols))

    def vector(self, name: str) -> np.ndarray:
        (length,) = (int(t) for t in self.header(name))
        return np.array([float(x) for x in self.take(length)])


def load_problem(path: Path) -> ConicProblem:
    reader = _Reader(Path(path))
    try:
        n = int(reader.header("conic-problem")[1])
        constant = float(reader.header("constant")[0])
        P, q = reader.sparse("P"), reader.vector("q")
        A, b = reader.sparse("A"), reader.vector("b")
        G, h = reader.sparse("G"), reader.vector("h")
        (count,) = (int(t) for t in reader.header("dims"))
        dims = [int(k) for k in reader.take(count)]
        M, m = reader.sparse("M"), reader.vector("m")
        R, s = reader.sparse("R"), reader.vector("s")
    except (IndexError, ValueError) as exc:
        raise InputError(f"{path}: malformed problem dump", details=str(exc)) from exc
    cones = ConeBlocks(dims=dims, M=M, m=m, R=R, s=s) if dims else ConeBlocks()
    return ConicProblem(
        n=n,
        P=P,
        q=q,
        r=constant,
        A=A if A.shape[0] else None,
        b=b,
        G=G if G.shape[0] else None,
        h=h,
        cones=cones,
    )
