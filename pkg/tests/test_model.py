import numpy as np
import pytest

from sudap import (
    AbundanceMatrix,
    DimensionMismatch,
    EndmemberMatrix,
    ImageCube,
    column_feasibility,
    validate_dimensions,
)


def test_endmember_matrix_coerces_to_float64():
    e = EndmemberMatrix(np.arange(12, dtype=np.int32).reshape(4, 3) + 1)
    assert e.data.dtype == np.float64
    assert e.n_bands == 4
    assert e.n_endmembers == 3


def test_endmember_matrix_rejects_wide_matrix():
    with pytest.raises(ValueError):
        EndmemberMatrix(np.ones((3, 5)))


def test_endmember_matrix_rejects_nan():
    bad = np.ones((6, 3))
    bad[2, 1] = np.nan
    with pytest.raises(ValueError):
        EndmemberMatrix(bad)


def test_endmember_matrix_rejects_vector():
    with pytest.raises(ValueError):
        EndmemberMatrix(np.ones(7))


def test_endmember_wavelengths_must_cover_bands():
    with pytest.raises(ValueError):
        EndmemberMatrix(np.ones((6, 2)), wavelengths=np.arange(5.0))


def test_image_cube_pixel_count_must_match_shape():
    data = np.ones((5, 12))
    cube = ImageCube(data, (3, 4))
    assert cube.n_pixels == 12
    assert cube.n_bands == 5
    with pytest.raises(ValueError):
        ImageCube(data, (3, 5))


def test_abundance_matrix_feasibility_enforced_when_flagged():
    good = np.array([[0.25, 0.5], [0.75, 0.5]])
    a = AbundanceMatrix(good, (1, 2), feasible=True)
    assert a.n_endmembers == 2
    bad = np.array([[0.6, 1.4], [0.6, -0.4]])
    with pytest.raises(ValueError):
        AbundanceMatrix(bad, (1, 2), feasible=True)
    # Without the flag the same data is accepted as-is.
    loose = AbundanceMatrix(bad, (1, 2), feasible=False)
    assert loose.data.shape == (2, 2)


def test_validate_dimensions_raises_on_band_mismatch():
    e = EndmemberMatrix(np.ones((8, 3)))
    cube = ImageCube(np.ones((9, 4)), (2, 2))
    with pytest.raises(DimensionMismatch) as info:
        validate_dimensions(e, cube)
    assert info.value.n_bands_e == 8
    assert info.value.n_bands_x == 9
    # Matching bands pass silently.
    validate_dimensions(e, ImageCube(np.ones((8, 4)), (2, 2)))


def _wrap(values):
    arr = np.asarray(values, dtype=float)
    return AbundanceMatrix(arr, (1, arr.shape[1]))


def test_column_feasibility_reports_worst_violations():
    report = column_feasibility(_wrap([[0.5, 0.7], [0.5, 0.301]]))
    assert not report.feasible
    assert report.max_sum_violation == pytest.approx(1e-3, rel=1e-9)
    assert report.min_entry == pytest.approx(0.301)

    clean = column_feasibility(_wrap([[1.0, 0.0], [0.0, 1.0]]))
    assert clean.feasible
    assert clean.max_sum_violation == 0.0


def test_column_feasibility_flags_negative_entries():
    report = column_feasibility(_wrap([[1.1], [-0.1]]), eps_neg=1e-9)
    assert not report.feasible
    assert report.min_entry == pytest.approx(-0.1)


def test_column_feasibility_is_scale_sensitive():
    a = _wrap([[0.4], [0.6]])
    assert column_feasibility(a).feasible
    doubled = _wrap([[0.8], [1.2]])
    report = column_feasibility(doubled)
    assert not report.feasible
    assert report.max_sum_violation == pytest.approx(1.0)
