"""Binary matrix and dictionary files.

Two little-endian formats, used for solver-state dumps and trained
dictionaries:

FLMAT1   magic "FLMAT1", uint32 rows, uint32 cols, then rows x cols
         float64 values in column-major order.
FLDICT1  magic "FLDICT1", uint32 dim, uint32 atom count K, uint32 bin
         count L, K uint32 atom labels, then the dim x K atom matrix in
         column-major float64.
"""

import struct

import numpy as np

from .dictionary import Dictionary
from .validation import as_float_matrix

__all__ = [
    "FileFormatError",
    "save_matrix",
    "load_matrix",
    "save_dictionary",
    "load_dictionary",
]

MATRIX_MAGIC = b"FLMAT1"
DICT_MAGIC = b"FLDICT1"


class FileFormatError(ValueError):
    """Raised when a matrix or dictionary file cannot be parsed."""


def save_matrix(path, mtx):
    """Write a 2-D array as an FLMAT1 file."""
    m = as_float_matrix(mtx)
    with open(path, "wb") as fh:
        fh.write(MATRIX_MAGIC)
        fh.write(struct.pack("<II", m.shape[0], m.shape[1]))
        fh.write(np.asarray(m, dtype="<f8").tobytes(order="F"))


def load_matrix(path):
    """Read an FLMAT1 file back into a (rows, cols) float64 array."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(MATRIX_MAGIC)] != MATRIX_MAGIC:
        raise FileFormatError("%s: not an FLMAT1 matrix file" % path)
    head = len(MATRIX_MAGIC)
    if len(blob) < head + 8:
        raise FileFormatError("%s: truncated matrix header" % path)
    rows, cols = struct.unpack_from("<II", blob, head)
    body = blob[head + 8 :]
    if len(body) != rows * cols * 8:
        raise FileFormatError(
            "%s: expected %d data bytes, found %d" % (path, rows * cols * 8, len(body))
        )
    data = np.frombuffer(body, dtype="<f8")
    return data.reshape((rows, cols), order="F").astype(np.float64)


def save_dictionary(path, dictionary):
    """Write a :class:`Dictionary` as an FLDICT1 file."""
    if not isinstance(dictionary, Dictionary):
        raise TypeError("expected a Dictionary")
    atoms = dictionary.atoms
    with open(path, "wb") as fh:
        fh.write(DICT_MAGIC)
        fh.write(
            struct.pack("<III", atoms.shape[0], atoms.shape[1], int(dictionary.bins))
        )
        fh.write(np.asarray(dictionary.labels, dtype="<u4").tobytes())
        fh.write(np.asarray(atoms, dtype="<f8").tobytes(order="F"))


def load_dictionary(path):
    """Read an FLDICT1 file back into a :class:`Dictionary`."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(DICT_MAGIC)] != DICT_MAGIC:
        raise FileFormatError("%s: not an FLDICT1 dictionary file" % path)
    head = len(DICT_MAGIC)
    if len(blob) < head + 12:
        raise FileFormatError("%s: truncated dictionary header" % path)
    dim, size, bins = struct.unpack_from("<III", blob, head)
    off = head + 12
    if len(blob) != off + size * 4 + dim * size * 8:
        raise FileFormatError("%s: dictionary payload has the wrong length" % path)
    labels = np.frombuffer(blob, dtype="<u4", count=size, offset=off).astype(np.int64)
    atoms = np.frombuffer(blob, dtype="<f8", offset=off + size * 4)
    atoms = atoms.reshape((dim, size), order="F").astype(np.float64)
    try:
        return Dictionary(atoms=atoms, labels=labels, bins=int(bins))
    except ValueError as exc:
        raise FileFormatError("%s: %s" % (path, exc))
