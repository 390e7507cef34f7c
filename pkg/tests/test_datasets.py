import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import write_five
from hierdecode import load_dataset, synth_generate
from hierdecode.datasets import apply_stop_nodes, sample_labels, save_dataset
from hierdecode.errors import DimensionMismatch, FormatError, InvalidAlpha, UnknownLabel
from strategies import trees


@pytest.fixture
def hier(tmp_path):
    return write_five(tmp_path / "five.tsv")


def test_roundtrip(tmp_path, five, hier):
    ds = synth_generate(five, 25, 0.5, seed=4)
    save_dataset(ds, tmp_path / "p.csv", tmp_path / "p.labels")
    back = load_dataset(hier, tmp_path / "p.csv", tmp_path / "p.labels")
    assert np.array_equal(back.probs, ds.probs)
    assert np.array_equal(back.labels, ds.labels)


def test_columns_are_reordered(tmp_path, hier):
    (tmp_path / "p.csv").write_text("b,a1,a2\n0.5,0.2,0.3\n")
    ds = load_dataset(hier, tmp_path / "p.csv")
    assert ds.probs.tolist() == [[0.2, 0.3, 0.5]]


def test_wrong_header(tmp_path, hier):
    (tmp_path / "p.csv").write_text("a1,a2\n0.5,0.5\n")
    with pytest.raises(DimensionMismatch):
        load_dataset(hier, tmp_path / "p.csv")


def test_bad_row_reports_line(tmp_path, hier):
    (tmp_path / "p.csv").write_text("a1,a2,b\n0.2,0.3,0.5\n0.9,0.9,0.9\n")
    with pytest.raises(FormatError) as info:
        load_dataset(hier, tmp_path / "p.csv")
    assert info.value.line == 3


def test_unknown_label(tmp_path, hier):
    (tmp_path / "p.csv").write_text("a1,a2,b\n0.2,0.3,0.5\n")
    (tmp_path / "y.labels").write_text("zz\n")
    with pytest.raises(UnknownLabel):
        load_dataset(hier, tmp_path / "p.csv", tmp_path / "y.labels")


def test_internal_label_maps_to_stop_leaf(tmp_path, hier):
    (tmp_path / "p.csv").write_text("a1,a2,A#stop,b\n0.2,0.3,0.1,0.4\n")
    (tmp_path / "y.labels").write_text("A\n")
    ds = load_dataset(hier, tmp_path / "p.csv", tmp_path / "y.labels", stop_nodes="A")
    assert ds.hierarchy.names[ds.labels[0]] == "A#stop"


def test_internal_label_without_stop_leaf(tmp_path, hier):
    (tmp_path / "p.csv").write_text("a1,a2,b\n0.2,0.3,0.5\n")
    (tmp_path / "y.labels").write_text("A\n")
    with pytest.raises(UnknownLabel):
        load_dataset(hier, tmp_path / "p.csv", tmp_path / "y.labels")


def test_stop_nodes_all(five):
    g = apply_stop_nodes(five, "all")
    assert g.leaf_count == 5 and "r#stop" in g.names


def test_alpha_must_be_positive(five):
    with pytest.raises(InvalidAlpha):
        synth_generate(five, 5, 0.0)


def test_synth_is_deterministic(five):
    a, b = synth_generate(five, 10, 1.0, seed=9), synth_generate(five, 10, 1.0, seed=9)
    assert np.array_equal(a.probs, b.probs) and np.array_equal(a.labels, b.labels)


def test_label_frequencies_follow_rows(five):
    rng = np.random.default_rng(0)
    probs = np.tile([0.2, 0.5, 0.3], (20000, 1))
    labels = sample_labels(five, probs, rng)
    freq = [np.mean(labels == l) for l in five.leaves]
    assert np.allclose(freq, [0.2, 0.5, 0.3], atol=0.015)


@given(trees(max_nodes=25), st.integers(0, 1000))
def test_labels_have_mass(h, seed):
    ds = synth_generate(h, 30, 0.1, seed=seed)
    cols = h.leaf_index[ds.labels]
    assert np.all(ds.probs[np.arange(30), cols] > 0)
    assert np.allclose(ds.probs.sum(axis=1), 1.0)
