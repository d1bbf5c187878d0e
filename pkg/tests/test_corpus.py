"""Label vectors, dataset loading, and distribution statistics."""

from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from scidiscourse import (
    ALL_LABEL_VECTORS,
    CorpusError,
    LabelParseError,
    LabelVector,
    Tweet,
    audit_dependency,
    compute_stats,
    load_dataset,
    parse_label_vector,
)
from tests.conftest import make_dataset


class TestLabelVector:
    def test_from_values_binarizes_at_half(self):
        vec = LabelVector.from_values([0.49, 0.5, 0.97])
        assert vec.as_tuple() == (0, 1, 1)

    def test_from_values_accepts_ints(self):
        assert LabelVector.from_values([1, 0, 1]).as_tuple() == (1, 0, 1)

    @pytest.mark.parametrize("bad", [[], [1.0], [1.0, 0.0], [1.0, 0.0, 0.0, 1.0]])
    def test_from_values_rejects_wrong_arity(self, bad):
        with pytest.raises(ValueError):
            LabelVector.from_values(bad)

    def test_serialize_is_canonical(self):
        assert LabelVector.from_values([1, 0, 0]).serialize() == "[1.0, 0.0, 0.0]"
        assert LabelVector.from_values([0, 0, 0]).serialize() == "[0.0, 0.0, 0.0]"

    def test_all_eight_vectors_round_trip(self):
        assert len(ALL_LABEL_VECTORS) == 8
        for vec in ALL_LABEL_VECTORS:
            assert parse_label_vector(vec.serialize()) == vec

    def test_hashable_and_ordered(self):
        vecs = set(ALL_LABEL_VECTORS)
        assert len(vecs) == 8
        assert min(ALL_LABEL_VECTORS).as_tuple() == (0, 0, 0)


class TestParseLabelVector:
    @pytest.mark.parametrize(
        "raw, expected",
        [
            ("[1.0, 0.0, 0.0]", (1, 0, 0)),
            ("[1, 1, 0]", (1, 1, 0)),
            ("[0.0,1.0,1.0]", (0, 1, 1)),
            ("[ 1.0 , 0.0 , 1.0 ]", (1, 0, 1)),
            ("[0.7, 0.2, 0.51]", (1, 0, 1)),
        ],
    )
    def test_accepts_variants(self, raw, expected):
        assert parse_label_vector(raw).as_tuple() == expected

    @pytest.mark.parametrize(
        "raw",
        ["", "[]", "[1.0, 0.0]", "[1, 0, 0, 1]", "[a, b, c]", "1.0, 0.0, 0.0", "[1.0 0.0 0.0]"],
    )
    def test_rejects_malformed(self, raw):
        with pytest.raises(LabelParseError) as exc:
            parse_label_vector(raw)
        assert exc.value.raw == raw


class TestTweet:
    def test_rejects_empty_text(self):
        with pytest.raises(ValueError):
            Tweet(index=1, text="   ")

    def test_rejects_non_integer_index(self):
        with pytest.raises(ValueError):
            Tweet(index="1", text="hello")


class TestLoadDataset:
    def write(self, tmp_path, body):
        p = tmp_path / "data.tsv"
        p.write_text(body, encoding="utf-8")
        return p

    def test_loads_labeled_split(self, tmp_path):
        p = self.write(tmp_path, "index\ttext\tlabels\n5\thello world\t[1.0, 0.0, 0.0]\n")
        ds = load_dataset(p, "train")
        assert len(ds) == 1
        assert ds.records[0].tweet.index == 5
        assert ds.records[0].labels.as_tuple() == (1, 0, 0)
        assert ds.gold_map() == {5: LabelVector.from_values([1, 0, 0])}

    def test_loads_unlabeled_eval_split(self, tmp_path):
        p = self.write(tmp_path, "index\ttext\n5\thello world\n")
        ds = load_dataset(p, "eval")
        assert ds.records[0].labels is None
        with pytest.raises(CorpusError):
            ds.gold_map()

    def test_unknown_split_rejected(self, tmp_path):
        p = self.write(tmp_path, "index\ttext\tlabels\n")
        with pytest.raises(CorpusError, match="unknown split"):
            load_dataset(p, "test")

    def test_missing_file(self, tmp_path):
        with pytest.raises(CorpusError, match="not found"):
            load_dataset(tmp_path / "nope.tsv", "train")

    def test_missing_labels_column_for_labeled_split(self, tmp_path):
        p = self.write(tmp_path, "index\ttext\n5\thello\n")
        with pytest.raises(CorpusError, match="requires a labels column"):
            load_dataset(p, "train")

    def test_labels_column_rejected_for_eval(self, tmp_path):
        p = self.write(tmp_path, "index\ttext\tlabels\n5\thello\t[1.0, 0.0, 0.0]\n")
        with pytest.raises(CorpusError, match="must not have a labels column"):
            load_dataset(p, "eval")

    def test_field_count_error_names_line(self, tmp_path):
        p = self.write(
            tmp_path,
            "index\ttext\tlabels\n1\tok\t[1.0, 0.0, 0.0]\n2\ttab\there\tbroken\t[0.0, 0.0, 0.0]\n",
        )
        with pytest.raises(CorpusError, match=r":3:"):
            load_dataset(p, "train")

    def test_duplicate_index_rejected(self, tmp_path):
        p = self.write(
            tmp_path,
            "index\ttext\tlabels\n1\ta\t[1.0, 0.0, 0.0]\n1\tb\t[0.0, 0.0, 0.0]\n",
        )
        with pytest.raises(CorpusError, match="duplicate index 1"):
            load_dataset(p, "train")

    def test_bad_labels_error_names_line(self, tmp_path):
        p = self.write(tmp_path, "index\ttext\tlabels\n1\ta\t[1.0, 0.0]\n")
        with pytest.raises(CorpusError, match=r":2:"):
            load_dataset(p, "train")

    def test_empty_text_rejected(self, tmp_path):
        p = self.write(tmp_path, "index\ttext\tlabels\n1\t \t[1.0, 0.0, 0.0]\n")
        with pytest.raises(CorpusError, match="empty tweet text"):
            load_dataset(p, "train")


class TestStats:
    def test_bundled_train_counts(self, train_ds):
        report = compute_stats(train_ds)
        assert report.total == 60
        assert report.per_category_counts == (20, 12, 26)
        assert report.none_count == 25
        assert report.cat2_without_cat3_violations == 0
        assert audit_dependency(train_ds) == []

    def test_bundled_dev_counts(self, dev_ds):
        report = compute_stats(dev_ds)
        assert report.total == 24
        assert report.per_category_counts == (8, 5, 11)
        assert report.none_count == 9
        assert report.cat2_without_cat3_violations == 0

    def test_regions_partition_the_dataset(self, train_ds):
        report = compute_stats(train_ds)
        assert sum(report.venn_region_counts.values()) + report.none_count == report.total

    def test_violations_are_reference_without_entity(self):
        ds = make_dataset(
            [
                (1, "pure reference", [0, 1, 0]),
                (2, "claim and reference", [1, 1, 0]),
                (3, "fine", [0, 1, 1]),
            ]
        )
        report = compute_stats(ds)
        assert report.cat2_without_cat3_violations == 2
        assert [r.tweet.index for r in audit_dependency(ds)] == [1, 2]

    def test_stats_require_labels(self):
        ds = make_dataset([(1, "no labels here", None)], split="eval")
        with pytest.raises(CorpusError):
            compute_stats(ds)

    def test_to_dict_round_trips_counts(self, dev_ds):
        doc = compute_stats(dev_ds).to_dict()
        assert doc["total"] == 24
        assert doc["per_category_counts"] == [8, 5, 11]


@given(
    st.lists(
        st.tuples(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1)),
        min_size=0,
        max_size=30,
    )
)
def test_serialize_parse_identity_property(prob_rows):
    for probs in prob_rows:
        vec = LabelVector.from_values(probs)
        assert parse_label_vector(vec.serialize()) == vec
