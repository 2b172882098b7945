import numpy as np
import pytest

from awnmf.data import LabeledDataset, add_noise, load_csv, save_csv, synth_planted
from awnmf.errors import DatasetError, DimensionError, NonnegativityError, ParseError
from awnmf.nmf import SolverOptions, fit


def write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_load_small_file(tmp_path):
    ds = load_csv(write(tmp_path, "1,2,a\n3,4,b\n5,6,a\n"))
    assert ds.X.shape == (2, 3)
    np.testing.assert_array_equal(ds.X, [[1, 3, 5], [2, 4, 6]])
    np.testing.assert_array_equal(ds.labels, [0, 1, 0])
    assert ds.class_count == 2
    assert ds.class_names == ["a", "b"]


def test_load_header_and_named_label(tmp_path):
    path = write(tmp_path, "x;cls;y\n1;u;2\n3;v;4\n", name="h.csv")
    ds = load_csv(path, label_column="cls", delimiter=";")
    np.testing.assert_array_equal(ds.X, [[1, 3], [2, 4]])
    np.testing.assert_array_equal(ds.labels, [0, 1])
    assert ds.name == "h"


def test_load_header_autodetected(tmp_path):
    ds = load_csv(write(tmp_path, "f1,f2,label\n1,2,0\n3,4,1\n"))
    assert ds.X.shape == (2, 2)


def test_load_drop_columns(tmp_path):
    ds = load_csv(write(tmp_path, "101,M,1,2\n102,B,3,4\n"), label_column=1, drop_columns=[0])
    np.testing.assert_array_equal(ds.X, [[1, 3], [2, 4]])
    np.testing.assert_array_equal(ds.labels, [1, 0])


def test_load_numeric_labels_sorted_numerically(tmp_path):
    ds = load_csv(write(tmp_path, "1,10\n1,2\n1,9\n"))
    np.testing.assert_array_equal(ds.labels, [2, 0, 1])


def test_load_parse_error_names_cell(tmp_path):
    with pytest.raises(ParseError) as err:
        load_csv(write(tmp_path, "1,2,a\n3,oops,b\n"))
    assert err.value.row == 2 and err.value.column == 2
    assert "oops" in str(err.value)


def test_load_ragged_row(tmp_path):
    with pytest.raises(ParseError):
        load_csv(write(tmp_path, "1,2,a\n3,b\n"))


def test_load_errors(tmp_path):
    with pytest.raises(DatasetError):
        load_csv(tmp_path / "missing.csv")
    with pytest.raises(DatasetError):
        load_csv(write(tmp_path, "\n\n"))
    with pytest.raises(DatasetError):
        load_csv(write(tmp_path, "a,b,label\n"))
    with pytest.raises(DatasetError):
        load_csv(write(tmp_path, "1,2,a\n"), label_column="nope")


def test_load_shifts_negative_values(tmp_path, caplog):
    ds = load_csv(write(tmp_path, "-1,2,a\n3,4,b\n"))
    np.testing.assert_array_equal(ds.X, [[0, 4], [3, 5]])
    assert ds.warnings and "shifted" in ds.warnings[0]
    assert "shifted" in caplog.text


def test_wdbc(wdbc_csv):
    ds = load_csv(wdbc_csv, label_column=1, drop_columns=[0])
    assert ds.n_samples == 569
    assert ds.class_count == 2
    assert ds.X.shape == (30, 569)


def test_save_load_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    ds = LabeledDataset(rng.random((4, 9)) * 1e3, rng.integers(0, 3, 9))
    path = tmp_path / "rt.csv"
    save_csv(ds, path)
    back = load_csv(path)
    np.testing.assert_array_equal(back.X, ds.X)
    np.testing.assert_array_equal(back.labels, np.unique(ds.labels, return_inverse=True)[1])


def test_subset_relabels():
    ds = LabeledDataset(np.arange(12.0).reshape(2, 6), [0, 1, 2, 0, 1, 2], class_names=["a", "b", "c"])
    sub = ds.subset([2, 0])
    np.testing.assert_array_equal(sub.labels, [1, 0, 1, 0])
    np.testing.assert_array_equal(sub.X, [[0, 2, 3, 5], [6, 8, 9, 11]])
    assert sub.class_names == ["c", "a"]


def test_dataset_label_length_checked():
    with pytest.raises(DimensionError):
        LabeledDataset(np.ones((2, 3)), [0, 1])


# --- synthetic data -------------------------------------------------------

def test_planted_without_outliers_has_rank_l():
    inst = synth_planted(12, 3, 20, 0, seed=1)
    assert np.linalg.matrix_rank(inst.dataset.X) <= 3
    assert inst.outliers.size == 0
    np.testing.assert_allclose(inst.dataset.X, inst.W @ inst.H)


def test_planted_outliers_recorded():
    inst = synth_planted(20, 2, 30, 3, seed=5)
    assert inst.outliers.size == 3 and len(set(inst.outliers)) == 3
    clean = np.delete(np.arange(30), inst.outliers)
    np.testing.assert_allclose(inst.dataset.X[:, clean], (inst.W @ inst.H)[:, clean])
    assert inst.dataset.class_count == 2


def test_planted_labels_follow_h_blocks():
    inst = synth_planted(10, 3, 12, 0, seed=2)
    np.testing.assert_array_equal(np.argmax(inst.H, axis=0), inst.dataset.labels)


def test_planted_reproducible():
    a, b = synth_planted(8, 2, 10, 2, seed=3), synth_planted(8, 2, 10, 2, seed=3)
    assert np.array_equal(a.dataset.X, b.dataset.X)


@pytest.mark.parametrize("args", [(5, 6, 10, 0), (5, 2, 10, 10), (5, 2, 10, -1)])
def test_planted_errors(args):
    with pytest.raises(DimensionError):
        synth_planted(*args, seed=0)


def test_planted_is_exactly_representable():
    X = synth_planted(20, 2, 30, 0, seed=4).dataset.X
    f = fit(X, 2, "EucNMF", SolverOptions(rng_seed=0))
    assert f.objective_trace[-1] < 1e-6 * np.sum(X ** 2)


# --- noise ----------------------------------------------------------------

def test_zero_noise_is_identity():
    X = np.random.default_rng(0).random((3, 4))
    np.testing.assert_array_equal(add_noise(X, 0.0, seed=1), X)


def test_zero_entries_unchanged():
    X = np.array([[0.0, 1.0], [2.0, 0.0]])
    Y = add_noise(X, 0.5, seed=2)
    assert Y[0, 0] == 0 and Y[1, 1] == 0


def test_noise_standard_deviation():
    X = np.ones((100, 100))
    rng_draw = np.random.default_rng(3).standard_normal((100, 100))
    Y = add_noise(X, 0.05, seed=3)
    # same stream as add_noise; no clamping happens at this scale
    np.testing.assert_allclose(Y - X, 0.05 * rng_draw)
    assert abs((Y - X).std() / 0.05 - 1) < 0.1


def test_noise_scales_with_entry_magnitude():
    X = np.hstack([np.full((200, 100), 1.0), np.full((200, 100), 9.0)])
    D = add_noise(X, 0.1, seed=4) - X
    assert D[:, :100].var() < D[:, 100:].var()


def test_noise_nonnegative_shape_and_reproducible():
    X = np.random.default_rng(5).random((6, 7)) * 0.01
    a, b = add_noise(X, 2.0, seed=6), add_noise(X, 2.0, seed=6)
    assert a.shape == X.shape and np.all(a >= 0)
    assert np.array_equal(a, b)


def test_noise_rejects_bad_input():
    with pytest.raises(NonnegativityError):
        add_noise([[-1.0]], 0.1)
    with pytest.raises(NonnegativityError):
        add_noise([[1.0]], -0.1)
