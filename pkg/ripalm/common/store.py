import json
import logging
import os
from typing import Dict, Iterable, Optional

import numpy as np

from .errors import InputError, IoError
from .models import Manifest, SolveReport
from .numerics import DenseMatrix, DenseVector, as_matrix, as_vector
from .utils import file_checksum

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
REPORT_FILE = "report.json"
VALUE_FORMAT = "%.17g"


def write_vector(path: str, vec: DenseVector) -> None:
    """Write a vector as a ``len`` header line followed by one value per line."""
    vec = np.asarray(vec, dtype=np.float64).reshape(-1)
    with open(path, "w") as handle:
        handle.write(f"{vec.shape[0]}\n")
        np.savetxt(handle, vec, fmt=VALUE_FORMAT)


def read_vector(path: str) -> DenseVector:
    header, values = _read_text(path)
    if len(header) != 1:
        raise IoError(f"{path}: vector header must hold one count, got {header}")
    if values.size != header[0]:
        raise IoError(f"{path}: header says {header[0]} entries, found {values.size}")
    return as_vector(values, name=path)


def write_matrix(path: str, mat: DenseMatrix) -> None:
    """Write a matrix as a ``rows cols`` header line followed by row-major rows."""
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim != 2:
        raise InputError(f"expected a matrix, got shape {mat.shape}")
    with open(path, "w") as handle:
        handle.write(f"{mat.shape[0]} {mat.shape[1]}\n")
        np.savetxt(handle, mat, fmt=VALUE_FORMAT)


def read_matrix(path: str) -> DenseMatrix:
    header, values = _read_text(path)
    if len(header) != 2:
        raise IoError(f"{path}: matrix header must hold rows and cols, got {header}")
    rows, cols = header
    if values.size != rows * cols:
        raise IoError(f"{path}: header says {rows}x{cols}, found {values.size} entries")
    return as_matrix(values.reshape(rows, cols), name=path)


def read_grid(path: str) -> DenseMatrix:
    """Read a grayscale grid from ``.npy`` or whitespace-separated text."""
    try:
        if path.endswith(".npy"):
            grid = np.load(path)
        else:
            grid = np.loadtxt(path, dtype=np.float64, ndmin=2)
    except (OSError, ValueError) as e:
        raise IoError(f"cannot read image grid {path}: {e}") from e
    return as_matrix(grid, name=path)


def _read_text(path: str):
    try:
        with open(path) as handle:
            header = [int(tok) for tok in handle.readline().split()]
            values = np.loadtxt(handle, dtype=np.float64, ndmin=1)
    except (OSError, ValueError) as e:
        raise IoError(f"cannot read {path}: {e}") from e
    return header, values.reshape(-1)


class InstanceStore:
    """File store for instances, solutions and reports under a root directory."""

    def __init__(self, root: str):
        self.root = root
        logger.debug(f"Initialized instance store with root: {root}")

    def resolve(self, directory: str) -> str:
        if os.path.isabs(directory):
            return directory
        return os.path.join(self.root, directory)

    def save_arrays(
        self,
        directory: str,
        vectors: Dict[str, DenseVector],
        matrices: Dict[str, DenseMatrix],
        manifest: Optional[Manifest] = None,
    ) -> Optional[Manifest]:
        """Write arrays (and a manifest with their checksums) into ``directory``."""
        directory = self.resolve(directory)
        try:
            os.makedirs(directory, exist_ok=True)
            for name, vec in vectors.items():
                write_vector(os.path.join(directory, f"{name}.txt"), vec)
            for name, mat in matrices.items():
                write_matrix(os.path.join(directory, f"{name}.txt"), mat)
            if manifest is not None:
                names = list(vectors) + list(matrices)
                manifest.checksums.update(
                    {f"{name}.txt": file_checksum(os.path.join(directory, f"{name}.txt")) for name in names}
                )
                self.write_manifest(directory, manifest)
        except OSError as e:
            raise IoError(f"cannot write into {directory}: {e}") from e
        logger.info(f"Saved {len(vectors) + len(matrices)} arrays to {directory}")
        return manifest

    def load_vectors(self, directory: str, names: Iterable[str]) -> Dict[str, DenseVector]:
        directory = self.resolve(directory)
        return {name: read_vector(self._existing(directory, name)) for name in names}

    def load_matrices(self, directory: str, names: Iterable[str]) -> Dict[str, DenseMatrix]:
        directory = self.resolve(directory)
        return {name: read_matrix(self._existing(directory, name)) for name in names}

    def write_manifest(self, directory: str, manifest: Manifest) -> None:
        with open(os.path.join(self.resolve(directory), MANIFEST_FILE), "w") as handle:
            handle.write(manifest.model_dump_json(indent=2))

    def read_manifest(self, directory: str) -> Manifest:
        path = self._existing(self.resolve(directory), MANIFEST_FILE, suffix="")
        try:
            with open(path) as handle:
                return Manifest.model_validate_json(handle.read())
        except ValueError as e:
            raise IoError(f"invalid manifest {path}: {e}") from e

    def verify_checksums(self, directory: str, manifest: Manifest) -> None:
        directory = self.resolve(directory)
        for name, expected in manifest.checksums.items():
            actual = file_checksum(self._existing(directory, name, suffix=""))
            if actual != expected:
                raise IoError(f"checksum mismatch for {os.path.join(directory, name)}")

    def write_report(self, directory: str, report: SolveReport) -> str:
        path = os.path.join(self.resolve(directory), REPORT_FILE)
        with open(path, "w") as handle:
            handle.write(report.model_dump_json(indent=2))
        return path

    def read_report(self, directory: str) -> SolveReport:
        path = self._existing(self.resolve(directory), REPORT_FILE, suffix="")
        with open(path) as handle:
            return SolveReport.model_validate(json.load(handle))

    @staticmethod
    def _existing(directory: str, name: str, suffix: str = ".txt") -> str:
        path = os.path.join(directory, f"{name}{suffix}")
        if not os.path.isfile(path):
            raise IoError(f"missing file {path}")
        return path


# Default store, rooted at RIPALM_DATA_DIR
instance_store = InstanceStore(root=os.environ.get("RIPALM_DATA_DIR", "."))
