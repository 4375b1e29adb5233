"""File formats: spectral library CSV, binary cube/abundance containers,
and convergence-curve CSV.

Binary container layout, all integers little-endian:

    bytes 0..3    magic, b"SUCB" for cubes, b"SUAB" for abundances
    bytes 4..7    version, u32, currently 1
    bytes 8..11   n_channels, u32 (bands for cubes, endmembers for
                  abundances)
    bytes 12..15  rows, u32
    bytes 16..19  cols, u32
    bytes 20..23  flags, u32; bit 0 set when a wavelength block follows
    [n_channels x f64 wavelengths when flag bit 0]
    n_channels * rows * cols x f64 payload, pixel-major: all channels of
    pixel 0, then all channels of pixel 1, ...

Everything is float64; readers validate the file length against the
header before touching the payload and fail with clean errors on
truncated or oversized files. CSV numbers are written with 17
significant digits, enough for exact float64 round trips.
"""

from __future__ import annotations

import csv
import struct

import numpy as np

from .errors import (
    BadMagic,
    EmptyFile,
    ParseError,
    TruncatedFile,
    VersionUnsupported,
)
from .metrics import ConvergenceCurve
from .model import AbundanceMatrix, ImageCube
from .simdata import SpectralLibrary

_HEADER = struct.Struct("<4sIIIII")
MAGIC_CUBE = b"SUCB"
MAGIC_ABUNDANCE = b"SUAB"
VERSION = 1
FLAG_WAVELENGTHS = 0x1


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


# ---------------------------------------------------------------- library


def read_library_csv(path) -> SpectralLibrary:
    """Load a spectral library from CSV.

    Layout: optional header row of signature names, optional leading
    column named `wavelength`, every other cell numeric; signatures are
    columns. A row whose cells all parse as numbers is data, anything
    else is treated as the (single) header row.
    """
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise EmptyFile(f"{path}: no rows")

    def try_floats(cells):
        try:
            return [float(c) for c in cells]
        except ValueError:
            return None

    names = None
    if try_floats(rows[0]) is None:
        names = [c.strip() for c in rows[0]]
        data_rows = rows[1:]
        first_data_line = 2
    else:
        data_rows = rows
        first_data_line = 1
    if not data_rows:
        raise EmptyFile(f"{path}: header but no data rows")

    width = len(data_rows[0])
    values = np.empty((len(data_rows), width))
    for r, row in enumerate(data_rows):
        line = first_data_line + r
        if len(row) != width:
            raise ParseError(
                line, len(row) + 1, f"expected {width} cells, got {len(row)}"
            )
        for c, cell in enumerate(row):
            try:
                values[r, c] = float(cell)
            except ValueError:
                raise ParseError(
                    line, c + 1, f"non-numeric cell {cell!r}"
                ) from None
    if names is not None and len(names) != width:
        raise ParseError(1, width, "header width differs from data width")

    wavelengths = None
    if names is not None and names and names[0].casefold() == "wavelength":
        if width < 2:
            raise EmptyFile(f"{path}: wavelength column but no signatures")
        wavelengths = values[:, 0].copy()
        values = values[:, 1:]
        names = names[1:]
    if names is None:
        names = [f"sig{j:02d}" for j in range(values.shape[1])]
    return SpectralLibrary(values, tuple(names), wavelengths=wavelengths)


def write_library_csv(path, lib: SpectralLibrary) -> None:
    """Inverse of read_library_csv; always writes a header row."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if lib.wavelengths is not None:
            writer.writerow(("wavelength",) + lib.names)
            for k in range(lib.n_bands):
                writer.writerow(
                    [_fmt(lib.wavelengths[k])]
                    + [_fmt(v) for v in lib.signatures[k]]
                )
        else:
            writer.writerow(lib.names)
            for k in range(lib.n_bands):
                writer.writerow([_fmt(v) for v in lib.signatures[k]])


# ------------------------------------------------------- binary containers


def _write_container(path, magic, data, rows, cols, wavelengths) -> None:
    data = np.asarray(data, dtype=np.float64)
    n_channels = data.shape[0]
    flags = FLAG_WAVELENGTHS if wavelengths is not None else 0
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(magic, VERSION, n_channels, rows, cols, flags))
        if wavelengths is not None:
            fh.write(np.asarray(wavelengths, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(data.T, dtype="<f8").tobytes())


def _read_container(path, expected_magic):
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < _HEADER.size:
        raise TruncatedFile(
            f"{path}: {len(buf)} bytes is too short for a header"
        )
    magic, version, n_channels, rows, cols, flags = _HEADER.unpack_from(buf)
    if magic != expected_magic:
        raise BadMagic(
            f"{path}: expected magic {expected_magic!r}, found {magic!r}"
        )
    if version != VERSION:
        raise VersionUnsupported(
            f"{path}: container version {version}, reader supports {VERSION}"
        )
    if n_channels < 1 or rows < 1 or cols < 1:
        raise TruncatedFile(
            f"{path}: header declares an empty payload "
            f"({n_channels} channels, {rows}x{cols} pixels)"
        )
    offset = _HEADER.size
    wavelengths = None
    expected = offset + 8 * n_channels * (rows * cols + bool(flags & FLAG_WAVELENGTHS))
    if len(buf) != expected:
        raise TruncatedFile(
            f"{path}: header implies {expected} bytes, file has {len(buf)}"
        )
    if flags & FLAG_WAVELENGTHS:
        wavelengths = np.frombuffer(
            buf, dtype="<f8", count=n_channels, offset=offset
        ).astype(np.float64)
        offset += 8 * n_channels
    flat = np.frombuffer(
        buf, dtype="<f8", count=n_channels * rows * cols, offset=offset
    )
    data = np.ascontiguousarray(flat.reshape(rows * cols, n_channels).T)
    return data, (rows, cols), wavelengths


def write_cube(path, cube: ImageCube) -> None:
    _write_container(
        path, MAGIC_CUBE, cube.data, cube.shape[0], cube.shape[1],
        cube.wavelengths,
    )


def read_cube(path) -> ImageCube:
    data, shape, wavelengths = _read_container(path, MAGIC_CUBE)
    return ImageCube(data, shape, wavelengths=wavelengths)


def write_abundance(path, a: AbundanceMatrix) -> None:
    _write_container(
        path, MAGIC_ABUNDANCE, a.data, a.shape[0], a.shape[1], None
    )


def read_abundance(path) -> AbundanceMatrix:
    data, shape, _ = _read_container(path, MAGIC_ABUNDANCE)
    return AbundanceMatrix(data, shape)


# ------------------------------------------------------------- curve CSV

_CURVE_HEADER = ["sweep", "time_s", "objective", "re_db", "nmse_db",
                 "unconverged"]


def _cell(value: float) -> str:
    if np.isnan(value):
        return ""
    if np.isneginf(value):
        return "-inf"
    return _fmt(value)


def write_curve_csv(curve: ConvergenceCurve, path) -> None:
    """One row per curve entry; nan cells empty, -inf literal `-inf`."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CURVE_HEADER)
        for k in range(curve.n_rows):
            row = [
                str(int(curve.sweep[k])),
                _fmt(curve.time_s[k]),
                _fmt(curve.objective[k]),
                _cell(curve.re_db[k]),
                _cell(curve.nmse_db[k]),
                ""
                if curve.unconverged is None
                else str(int(curve.unconverged[k])),
            ]
            writer.writerow(row)


def read_curve_csv(path) -> ConvergenceCurve:
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise EmptyFile(f"{path}: no rows")
    if rows[0] != _CURVE_HEADER:
        raise ParseError(1, 1, f"unexpected curve header {rows[0]!r}")
    n = len(rows) - 1
    sweep = np.zeros(n, dtype=np.int64)
    time_s = np.zeros(n)
    objective = np.zeros(n)
    re_db = np.zeros(n)
    nmse = np.zeros(n)
    counts = np.zeros(n, dtype=np.int64)
    have_counts = True
    for k, row in enumerate(rows[1:]):
        line = k + 2
        if len(row) != len(_CURVE_HEADER):
            raise ParseError(line, len(row) + 1, "wrong cell count")
        try:
            sweep[k] = int(row[0])
            time_s[k] = float(row[1])
            objective[k] = float(row[2])
            re_db[k] = float(row[3]) if row[3] else np.nan
            nmse[k] = float(row[4]) if row[4] else np.nan
            if row[5]:
                counts[k] = int(row[5])
            else:
                have_counts = False
        except ValueError as exc:
            raise ParseError(line, 1, str(exc)) from None
    return ConvergenceCurve(
        sweep=sweep,
        time_s=time_s,
        objective=objective,
        re_db=re_db,
        nmse_db=nmse,
        unconverged=counts if have_counts and n > 0 else None,
    )
