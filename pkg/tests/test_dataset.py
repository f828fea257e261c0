import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from veilkit.dataset import (
    AgeGroup,
    Expression,
    FeatureDataset,
    Gender,
    SampleMeta,
    derive_age_group,
    format_sample_name,
    label_view,
    load_features,
    parse_sample_name,
    save_features,
    synth_dataset,
)
from veilkit.errors import (
    DimMismatch,
    FormatError,
    MalformedName,
    NonFiniteValueError,
)


def test_parse_known_names():
    assert parse_sample_name("S1-P2-M-14-1-N") == SampleMeta(
        1, 2, Gender.MALE, 14, 1, Expression.NORMAL
    )
    assert parse_sample_name("S2-P100-F-36-2-S") == SampleMeta(
        2, 100, Gender.FEMALE, 36, 2, Expression.SMILE
    )
    assert parse_sample_name("S1-P57-F-55-2-S") == SampleMeta(
        1, 57, Gender.FEMALE, 55, 2, Expression.SMILE
    )


@pytest.mark.parametrize(
    "name,field",
    [
        ("S3-P1-M-20-1-N", "session"),
        ("X1-P1-M-20-1-N", "session"),
        ("S1-P0-M-20-1-N", "subject"),
        ("S1-P07-M-20-1-N", "subject"),
        ("S1-Q7-M-20-1-N", "subject"),
        ("S1-P7-X-20-1-N", "gender"),
        ("S1-P7-M-7-1-N", "age"),
        ("S1-P7-M-79-1-N", "age"),
        ("S1-P7-M-xx-1-N", "age"),
        ("S1-P7-M-20-8-N", "image"),
        ("S1-P7-M-20-0-N", "image"),
        ("S1-P7-M-20-1-Q", "expression"),
        ("S1-P7-M-20-1", "field count"),
        ("S1-P7-M-20-1-N-extra", "field count"),
    ],
)
def test_parse_rejects_bad_fields(name, field):
    with pytest.raises(MalformedName) as err:
        parse_sample_name(name)
    assert err.value.field == field


_meta_strategy = st.builds(
    SampleMeta,
    session=st.sampled_from((1, 2)),
    subject=st.integers(min_value=1, max_value=500),
    gender=st.sampled_from(Gender),
    age_years=st.integers(min_value=8, max_value=78),
    image_index=st.integers(min_value=1, max_value=7),
    expression=st.sampled_from(Expression),
)


@given(_meta_strategy)
def test_name_round_trip(meta):
    assert parse_sample_name(format_sample_name(meta)) == meta


def test_age_groups_fixed_points():
    assert derive_age_group(14) is AgeGroup.CHILDREN
    assert derive_age_group(36) is AgeGroup.ADULTS
    assert derive_age_group(55) is AgeGroup.ELDERLY
    assert derive_age_group(19) is AgeGroup.YOUTH
    # bracket edges; 18 sits in Children so every integer has one bracket
    assert derive_age_group(18) is AgeGroup.CHILDREN
    assert derive_age_group(30) is AgeGroup.YOUTH
    assert derive_age_group(31) is AgeGroup.ADULTS
    assert derive_age_group(50) is AgeGroup.ADULTS
    assert derive_age_group(51) is AgeGroup.ELDERLY


def test_age_groups_partition_and_monotone():
    groups = [derive_age_group(a) for a in range(1, 121)]
    assert all(b >= a for a, b in zip(groups, groups[1:]))
    assert set(groups) == set(AgeGroup)


def test_label_view_vpi_counts(vpi_like_dataset):
    age = label_view(vpi_like_dataset, "age")
    assert age.class_names == ("Children", "Youth", "Adults", "Elderly")
    assert age.class_sizes().tolist() == [504, 1050, 462, 84]

    smile = label_view(vpi_like_dataset, "smile")
    assert smile.class_names == ("Normal", "Smile")
    assert smile.class_sizes().tolist() == [1500, 600]

    ident = label_view(vpi_like_dataset, "identity")
    assert len(ident.class_names) == 150
    assert set(ident.class_sizes().tolist()) == {14}


def test_label_view_orderings(vpi_like_dataset):
    ident = label_view(vpi_like_dataset, "identity")
    subjects = [int(name[1:]) for name in ident.class_names]
    assert subjects == sorted(subjects)
    gender = label_view(vpi_like_dataset, "gender")
    assert gender.class_names == ("Female", "Male")


def test_label_view_single_sample():
    meta = (SampleMeta(1, 9, Gender.MALE, 20, 1, Expression.NORMAL),)
    ds = FeatureDataset(np.ones((1, 3)), meta, "fc7")
    view = label_view(ds, "identity")
    assert view.class_names == ("P9",)
    assert view.labels.tolist() == [0]


@given(
    st.integers(min_value=2, max_value=6),
    st.integers(min_value=1, max_value=9),
    st.sampled_from(["identity", "gender", "age", "smile"]),
)
@settings(max_examples=30, deadline=None)
def test_label_counts_sum_to_n(classes, per_class, task):
    ds, _ = synth_dataset(classes, per_class, 3, 1.0, seed=0)
    view = label_view(ds, task)
    assert int(view.class_sizes().sum()) == ds.n


def _tiny_dataset(values, tag="fc6"):
    values = np.asarray(values, dtype=np.float64)
    meta = tuple(
        SampleMeta(1, i + 1, Gender.MALE, 20, 1, Expression.NORMAL)
        for i in range(values.shape[0])
    )
    return FeatureDataset(values, meta, tag)


def test_save_load_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(5)
    vals = rng.standard_normal((4, 9))
    vals[0, 0] = 0.1
    vals[1, 1] = 1.0 / 3.0
    vals[2, 2] = 1e-300
    vals[3, 3] = -12345.6789
    ds = _tiny_dataset(vals, tag="fc7")
    path = tmp_path / "feat.csv"
    save_features(ds, str(path))
    back = load_features(str(path))
    assert back.layer_tag == "fc7"
    assert back.meta == ds.meta
    assert np.array_equal(back.features, ds.features)
    # a second save of the reloaded data is byte-identical
    path2 = tmp_path / "feat2.csv"
    save_features(back, str(path2))
    assert path.read_bytes() == path2.read_bytes()


def test_load_well_formed_raw_width_file(tmp_path):
    rng = np.random.default_rng(6)
    ds = _tiny_dataset(rng.standard_normal((3, 4096)))
    path = tmp_path / "raw.csv"
    save_features(ds, str(path))
    back = load_features(str(path), expected_dim=4096)
    assert (back.n, back.dim) == (3, 4096)
    assert np.array_equal(back.features, ds.features)


def test_load_reports_nan_position(tmp_path):
    vals = np.arange(4 * 10, dtype=np.float64).reshape(4, 10)
    ds = _tiny_dataset(vals)
    path = tmp_path / "bad.csv"
    save_features(ds, str(path))
    lines = path.read_text().split("\n")
    fields = lines[3].split(",")  # data row 2
    fields[2 + 7] = "NaN"
    lines[3] = ",".join(fields)
    path.write_text("\n".join(lines))
    with pytest.raises(NonFiniteValueError) as err:
        load_features(str(path))
    assert isinstance(err.value, ValueError)
    assert (err.value.row, err.value.col) == (2, 7)


def test_load_rejects_empty_data(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("name,layer,f0,f1\n")
    with pytest.raises(FormatError):
        load_features(str(path))


def test_load_rejects_ragged_rows(tmp_path):
    path = tmp_path / "ragged.csv"
    path.write_text(
        "name,layer,f0,f1\n"
        "S1-P1-M-20-1-N,fc6,1.0,2.0\n"
        "S1-P2-M-20-1-N,fc6,1.0\n"
    )
    with pytest.raises(FormatError) as err:
        load_features(str(path))
    assert "line 3" in str(err.value)


def test_load_rejects_mixed_layer_tags(tmp_path):
    path = tmp_path / "mixed.csv"
    path.write_text(
        "name,layer,f0\n"
        "S1-P1-M-20-1-N,fc6,1.0\n"
        "S1-P2-M-20-1-N,fc7,1.0\n"
    )
    with pytest.raises(FormatError):
        load_features(str(path))


def test_load_rejects_bad_header_and_tokens(tmp_path):
    path = tmp_path / "hdr.csv"
    path.write_text("sample,layer,f0\nS1-P1-M-20-1-N,fc6,1.0\n")
    with pytest.raises(FormatError):
        load_features(str(path))

    path.write_text("name,layer,f0\nS1-P1-M-20-1-N,fc6,abc\n")
    with pytest.raises(FormatError) as err:
        load_features(str(path))
    assert "abc" in str(err.value)

    path.write_text("name,layer,f0\nS1-P1-M-20-1-N,vgg,1.0\n")
    with pytest.raises(FormatError):
        load_features(str(path))


def test_load_expected_dim(tmp_path):
    ds = _tiny_dataset(np.ones((2, 3)))
    path = tmp_path / "d3.csv"
    save_features(ds, str(path))
    assert load_features(str(path), expected_dim=3).dim == 3
    with pytest.raises(DimMismatch):
        load_features(str(path), expected_dim=4096)


def test_synth_shapes_and_determinism():
    ds, view = synth_dataset(2, 5, 3, 10.0, seed=1)
    assert ds.features.shape == (10, 3)
    assert view.class_sizes().tolist() == [5, 5]
    again, _ = synth_dataset(2, 5, 3, 10.0, seed=1)
    assert np.array_equal(ds.features, again.features)
    assert ds.meta == again.meta

    # different seeds must stay row-aligned for merging
    other, _ = synth_dataset(2, 5, 3, 10.0, seed=2)
    assert other.meta == ds.meta
    assert not np.array_equal(other.features, ds.features)


def test_synth_separation_zero_shares_centroid():
    ds, view = synth_dataset(3, 50, 4, 0.0, seed=7)
    mean0 = ds.features[view.labels == 0].mean(axis=0)
    mean1 = ds.features[view.labels == 1].mean(axis=0)
    assert np.linalg.norm(mean0 - mean1) < 1.0  # noise only, no separation


def test_synth_well_separated():
    ds, view = synth_dataset(2, 5, 3, 10.0, seed=1)
    c0 = ds.features[view.labels == 0].mean(axis=0)
    c1 = ds.features[view.labels == 1].mean(axis=0)
    assert np.linalg.norm(c0 - c1) > 5.0
