import logging
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator

import numpy as np
import yaml

from src.core import InputError, OutputError
from src.models import (
    EnergyRecord,
    EpipolarTriangulation,
    FeatureSet,
    FundamentalMatrix,
    GroundTruth,
    MatchSet,
    PLMap,
    SceneSpec,
    SolveReport,
)

logger = logging.getLogger(__name__)

MATCH_HEADER = "x1,y1,x2,y2"


def _fmt(value: float) -> str:
    return "%.17g" % value


@contextmanager
def atomic_path(path: Path) -> Iterator[Path]:
    """Yield a sibling temporary path; it replaces ``path`` only if the block succeeds."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=path.suffix, dir=path.parent)
        os.close(fd)
    except OSError as exc:
        raise OutputError(f"Cannot write {path}", details=str(exc)) from exc
    tmp = Path(tmp)
    try:
        yield tmp
        os.replace(tmp, path)
    except OSError as exc:
        raise OutputError(f"Cannot write {path}", details=str(exc)) from exc
    finally:
        if tmp.exists():
            tmp.unlink()


def atomic_write_text(path: Path, text: str) -> Path:
    with atomic_path(path) as tmp:
        tmp.write_text(text, encoding="utf-8")
    logger.debug("wrote %s", path)
    return Path(path)


def read_text(path: Path) -> str:
    path = Path(path)
    try:
        return path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise InputError(f"Input file not found: {path}") from exc
    except OSError as exc:
        raise InputError(f"Cannot read {path}", details=str(exc)) from exc


def _parse_numbers(line: str, path: Path, lineno: int, sep: str | None = None) -> list[float]:
    try:
        return [float(tok) for tok in line.split(sep)]
    except ValueError as exc:
        raise InputError(f"{path}:{lineno}: expected numbers", details=line.strip()) from exc


def _content_lines(text: str) -> list[tuple[int, str]]:
    return [(n, line) for n, line in enumerate(text.splitlines(), start=1) if line.strip() and not line.startswith("#")]


def read_yaml(path: Path) -> Any:
    try:
        return yaml.safe_load(read_text(path))
    except yaml.YAMLError as exc:
        raise InputError(f"{path}: invalid YAML", details=str(exc)) from exc


def write_yaml(data: Any, path: Path) -> Path:
    return atomic_write_text(path, yaml.safe_dump(data, sort_keys=False))


# fundamental matrix: three lines of three numbers


def read_fundamental(path: Path) -> FundamentalMatrix:
    rows = [_parse_numbers(line, path, n) for n, line in _content_lines(read_text(path))]
    values = [v for row in rows for v in row]
    if len(values) != 9:
        raise InputError(f"{path}: expected 9 matrix entries, found {len(values)}")
    return FundamentalMatrix(entries=np.reshape(values, (3, 3)))


def write_fundamental(F: FundamentalMatrix, path: Path) -> Path:
    text = "".join(" ".join(_fmt(v) for v in row) + "\n" for row in F.entries)
    return atomic_write_text(path, text)


# features: "dim D" header, then "x y d1 ... dD"


def read_features(path: Path) -> FeatureSet:
    lines = _content_lines(read_text(path))
    if not lines or lines[0][1].split()[0] != "dim":
        raise InputError(f"{path}: missing 'dim D' header")
    header = lines[0][1].split()
    try:
        dim = int(header[1])
    except (IndexError, ValueError) as exc:
        raise InputError(f"{path}: malformed header", details=lines[0][1]) from exc
    rows = []
    for n, line in lines[1:]:
        values = _parse_numbers(line, path, n)
        if len(values) != dim + 2:
            raise InputError(f"{path}:{n}: expected {dim + 2} values, found {len(values)}")
        rows.append(values)
    data = np.array(rows, dtype=float).reshape(-1, dim + 2)
    return FeatureSet(keypoints=data[:, :2], descriptors=data[:, 2:])


def write_features(features: FeatureSet, path: Path) -> Path:
    lines = [f"dim {features.dim}"]
    for point, descriptor in zip(features.keypoints, features.descriptors):
        lines.append(" ".join(_fmt(v) for v in (*point, *descriptor)))
    return atomic_write_text(path, "\n".join(lines) + "\n")


# matches: "x1,y1,x2,y2"


def read_matches(path: Path) -> MatchSet:
    lines = _content_lines(read_text(path))
    if not lines or lines[0][1].strip().replace(" ", "") != MATCH_HEADER:
        raise InputError(f"{path}: missing '{MATCH_HEADER}' header")
    rows = []
    for n, line in lines[1:]:
        values = _parse_numbers(line, path, n, sep=",")
        if len(values) != 4:
            raise InputError(f"{path}:{n}: expected 4 values, found {len(values)}")
        rows.append(values)
    data = np.array(rows, dtype=float).reshape(-1, 4)
    return MatchSet(sources=data[:, :2], targets=data[:, 2:])


def write_matches(matches: MatchSet, path: Path) -> Path:
    lines = [MATCH_HEADER]
    for p, q in zip(matches.sources, matches.targets):
        lines.append(",".join(_fmt(v) for v in (*p, *q)))
    return atomic_write_text(path, "\n".join(lines) + "\n")


# triangulation and map


def write_triangulation(mesh: EpipolarTriangulation, path: Path) -> Path:
    lines = [f"vertices {mesh.n_vertices}"]
    lines += [f"{_fmt(x)} {_fmt(y)}" for x, y in mesh.vertices]
    lines.append(f"faces {mesh.n_faces}")
    lines += [f"{i} {j} {k} {edge}" for (i, j, k), edge in zip(mesh.faces, mesh.marked_edges)]
    return atomic_write_text(path, "\n".join(lines) + "\n")


def read_triangulation_arrays(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vertices, faces and marked edges of an exported triangulation."""
    lines = [line for _, line in _content_lines(read_text(path))]
    try:
        n_vertices = int(lines[0].split()[1])
        vertices = np.array([[float(v) for v in line.split()] for line in lines[1 : 1 + n_vertices]])
        n_faces = int(lines[1 + n_vertices].split()[1])
        rows = np.array(
            [[int(v) for v in line.split()] for line in lines[2 + n_vertices : 2 + n_vertices + n_faces]],
            dtype=np.int64,
        ).reshape(-1, 4)
    except (IndexError, ValueError) as exc:
        raise InputError(f"{path}: malformed triangulation file") from exc
    return vertices.reshape(-1, 2), rows[:, :3], rows[:, 3]


def write_plmap(phi: PLMap, path: Path) -> Path:
    return atomic_write_text(path, "".join(f"{_fmt(x)} {_fmt(y)}\n" for x, y in phi.targets))


def read_plmap(path: Path) -> PLMap:
    rows = [_parse_numbers(line, path, n) for n, line in _content_lines(read_text(path))]
    if any(len(r) != 2 for r in rows):
        raise InputError(f"{path}: expected 'x y' per line")
    return PLMap(targets=np.array(rows, dtype=float).reshape(-1, 2))


# solve report: YAML with the triangulation it was solved on


def write_report(report: SolveReport, mesh: EpipolarTriangulation, path: Path) -> Path:
    data = {
        "image": {"width": mesh.image.width, "height": mesh.image.height},
        "epipole": {"vector": mesh.epipole.vector.tolist(), "at_infinity": mesh.epipole.at_infinity},
        "orientation": report.orientation,
        "threshold": report.threshold,
        "dropped": report.dropped,
        "eps_schedule": list(report.eps_schedule),
        "unconstrained_rays": list(report.unconstrained_rays),
        "energy_trace": [r.model_dump() for r in report.energy_trace],
        "pairs": {
            "kept": report.kept.tolist(),
            "residuals": report.residuals.tolist(),
            "inliers": report.inliers.tolist(),
        },
        "mesh": mesh.model_dump(include={"vertices", "faces", "marked_edges", "line_points", "line_directions", "ray_ids", "ray_coords"}),
        "map": report.map.targets.tolist(),
    }
    return write_yaml(data, path)


def read_report(path: Path) -> tuple[SolveReport, EpipolarTriangulation]:
    data = read_yaml(path)
    try:
        mesh = EpipolarTriangulation(
            image=data["image"],
            epipole=data["epipole"],
            **data["mesh"],
        )
        report = SolveReport(
            map=PLMap(targets=data["map"]),
            residuals=data["pairs"]["residuals"],
            inliers=data["pairs"]["inliers"],
            kept=data["pairs"]["kept"],
            dropped=data["dropped"],
            energy_trace=[EnergyRecord(**r) for r in data["energy_trace"]],
            eps_schedule=data["eps_schedule"],
            unconstrained_rays=data["unconstrained_rays"],
            threshold=data["threshold"],
            orientation=data["orientation"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: malformed solve report", details=str(exc)) from exc
    return report, mesh


# scene specs and ground truth


def read_scene_spec(path: Path) -> SceneSpec:
    data = read_yaml(path)
    if not isinstance(data, dict):
        raise InputError(f"{path}: scene spec must be a mapping")
    try:
        return SceneSpec(**data)
    except ValueError as exc:
        raise InputError(f"{path}: invalid scene spec", details=str(exc)) from exc


def write_scene_spec(spec: SceneSpec, path: Path) -> Path:
    return write_yaml(spec.model_dump(), path)


def write_ground_truth(gt: GroundTruth, path: Path) -> Path:
    data = {
        "spec": gt.spec.model_dump(),
        "fundamental": gt.fundamental.entries.tolist(),
        "sources": gt.matches.sources.tolist(),
        "targets": gt.matches.targets.tolist(),
        "true_targets": gt.true_targets.tolist(),
        "labels": gt.labels.tolist(),
    }
    return write_yaml(data, path)


def read_ground_truth(path: Path, features_a: FeatureSet | None = None, features_b: FeatureSet | None = None) -> GroundTruth:
    """Ground truth without descriptors unless the feature sets are passed in."""
    data = read_yaml(path)
    try:
        empty = FeatureSet(keypoints=np.zeros((0, 2)), descriptors=np.zeros((0, 1)))
        return GroundTruth(
            spec=SceneSpec(**data["spec"]),
            fundamental=FundamentalMatrix(entries=data["fundamental"]),
            matches=MatchSet(sources=data["sources"], targets=data["targets"]),
            labels=data["labels"],
            true_targets=data["true_targets"],
            features_a=features_a or empty,
            features_b=features_b or empty,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: malformed ground truth", details=str(exc)) from exc
