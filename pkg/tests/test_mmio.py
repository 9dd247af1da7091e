import numpy as np
import pytest
import scipy.io

from skewpencil import MatrixMarketError, read_matrix_market, write_vectors


def write(tmp_path, text, name="m.mtx"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_general_coordinate(tmp_path):
    path = write(tmp_path, "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 0.4\n2 1 -0.4\n")
    np.testing.assert_array_equal(read_matrix_market(path).toarray(), [[0, 0.4], [-0.4, 0]])


def test_skew_symmetric_expansion(tmp_path):
    path = write(tmp_path, "%%MatrixMarket matrix coordinate real skew-symmetric\n% c\n2 2 1\n2 1 -0.4\n")
    np.testing.assert_array_equal(read_matrix_market(path).toarray(), [[0, 0.4], [-0.4, 0]])


def test_symmetric_expansion(tmp_path):
    path = write(tmp_path, "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 3\n2 1 1\n")
    np.testing.assert_array_equal(read_matrix_market(path).toarray(), [[3, 1], [1, 0]])


def test_pattern_and_integer(tmp_path):
    path = write(tmp_path, "%%MatrixMarket matrix coordinate pattern general\n2 2 1\n1 2\n")
    np.testing.assert_array_equal(read_matrix_market(path).toarray(), [[0, 1], [0, 0]])
    path = write(tmp_path, "%%MatrixMarket matrix coordinate integer general\n1 1 1\n1 1 7\n", "i.mtx")
    assert read_matrix_market(path)[0, 0] == 7


def test_array_format(tmp_path):
    path = write(tmp_path, "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n")
    np.testing.assert_array_equal(read_matrix_market(path).toarray(), [[1, 3], [2, 4]])


def test_malformed_header_names_line(tmp_path):
    path = write(tmp_path, "%%MatrixMarket matrix sideways real general\n1 1 1\n1 1 1\n")
    with pytest.raises(MatrixMarketError, match="line 1") as info:
        read_matrix_market(path)
    assert info.value.lineno == 1


def test_complex_rejected(tmp_path):
    path = write(tmp_path, "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n")
    with pytest.raises(MatrixMarketError, match="complex"):
        read_matrix_market(path)


def test_bad_entry_line(tmp_path):
    path = write(tmp_path, "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n2 x 1\n")
    with pytest.raises(MatrixMarketError, match="line 4"):
        read_matrix_market(path)


def test_out_of_range_and_count(tmp_path):
    path = write(tmp_path, "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n")
    with pytest.raises(MatrixMarketError, match="out of range"):
        read_matrix_market(path)
    path = write(tmp_path, "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n", "c.mtx")
    with pytest.raises(MatrixMarketError, match="expected 2 entries"):
        read_matrix_market(path)


def test_write_vectors_roundtrip(tmp_path, rng):
    vecs = rng.standard_normal((5, 4))
    path = tmp_path / "vecs.out"
    write_vectors(path, vecs, comment="test")
    assert path.exists()
    np.testing.assert_allclose(scipy.io.mmread(str(path)), vecs, rtol=1e-15)
    np.testing.assert_allclose(read_matrix_market(path).toarray(), vecs, rtol=1e-15)
