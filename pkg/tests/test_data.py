"""IDX file IO, normalization, one-hot encoding, synthetic generation."""

import gzip
import struct

import pytest

from bregman_perceptron.data import (
    IMAGES_MAGIC,
    LABELS_MAGIC,
    TEST_IMAGES,
    TEST_LABELS,
    TRAIN_IMAGES,
    TRAIN_LABELS,
    DataError,
    IdxDimensionError,
    IdxImages,
    IdxMagicError,
    IdxTruncationError,
    LabelRangeError,
    LabeledDataset,
    MissingDataError,
    load_dataset_dir,
    load_idx_images,
    load_idx_labels,
    load_labeled,
    normalize_pixels,
    one_hot,
    subsample,
    synthetic_dataset,
    write_idx_images,
    write_idx_labels,
)
from bregman_perceptron.experiment import accuracy, synthetic_holdout
from bregman_perceptron.tensor import DenseMatrix


def images_blob(count, rows, cols, pixels=None):
    if pixels is None:
        pixels = bytes(range(count * rows * cols % 256 or 1)) * 0 + bytes(
            (i % 256) for i in range(count * rows * cols)
        )
    return struct.pack(">IIII", IMAGES_MAGIC, count, rows, cols) + pixels


def labels_blob(labels):
    return struct.pack(">II", LABELS_MAGIC, len(labels)) + bytes(labels)


class TestIdxIO:
    def test_images_round_trip(self, tmp_path):
        img = IdxImages(2, 3, 4, bytes(range(24)))
        p = tmp_path / "imgs"
        write_idx_images(p, img)
        back = load_idx_images(p)
        assert back == img

    def test_labels_round_trip(self, tmp_path):
        p = tmp_path / "labs"
        write_idx_labels(p, [0, 5, 9, 2])
        assert load_idx_labels(p) == [0, 5, 9, 2]

    def test_gzip_round_trip(self, tmp_path):
        img = IdxImages(1, 2, 2, bytes([7, 8, 9, 10]))
        p = tmp_path / "imgs.gz"
        write_idx_images(p, img)
        # the file on disk really is gzip
        assert p.read_bytes()[:2] == b"\x1f\x8b"
        assert load_idx_images(p) == img
        q = tmp_path / "labs.gz"
        write_idx_labels(q, [1, 2])
        assert load_idx_labels(q) == [1, 2]

    def test_gzip_writes_are_reproducible(self, tmp_path):
        a, b = tmp_path / "a.gz", tmp_path / "b.gz"
        write_idx_labels(a, [3, 1, 4])
        write_idx_labels(b, [3, 1, 4])
        assert a.read_bytes() == b.read_bytes()  # mtime pinned to zero

    def test_wrong_magic(self, tmp_path):
        p = tmp_path / "bad"
        # full-length images header, wrong magic word
        p.write_bytes(struct.pack(">IIII", LABELS_MAGIC, 1, 1, 1) + bytes([0]))
        with pytest.raises(IdxMagicError):
            load_idx_images(p)
        q = tmp_path / "bad2"
        q.write_bytes(images_blob(1, 1, 1, bytes([0])))
        with pytest.raises(IdxMagicError):
            load_idx_labels(q)

    def test_truncated_payload(self, tmp_path):
        p = tmp_path / "short"
        p.write_bytes(images_blob(2, 2, 2)[:-3])
        with pytest.raises(IdxTruncationError):
            load_idx_images(p)

    def test_truncated_header(self, tmp_path):
        p = tmp_path / "stub"
        p.write_bytes(b"\x00\x00")
        with pytest.raises(IdxTruncationError):
            load_idx_images(p)

    def test_absurd_dimensions(self, tmp_path):
        p = tmp_path / "huge"
        p.write_bytes(struct.pack(">IIII", IMAGES_MAGIC, 2**31, 2**20, 2**20))
        with pytest.raises(IdxDimensionError):
            load_idx_images(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_idx_images(tmp_path / "nope")

    def test_corrupt_gzip(self, tmp_path):
        p = tmp_path / "fake.gz"
        p.write_bytes(b"\x1f\x8b not really gzip")
        with pytest.raises(DataError):
            load_idx_labels(p)


class TestNormalization:
    def test_pixel_scale(self):
        img = IdxImages(1, 1, 3, bytes([0, 128, 255]))
        X = normalize_pixels(img)
        assert X.shape == (1, 3)
        assert X[0, 0] == 0.0
        assert X[0, 1] == 128.0 / 255.0
        assert X[0, 2] == 1.0

    def test_rows_flattened_per_sample(self):
        img = IdxImages(2, 2, 2, bytes([255, 0, 0, 255, 0, 0, 255, 255]))
        X = normalize_pixels(img)
        assert X.to_rows() == [[1.0, 0.0, 0.0, 1.0], [0.0, 0.0, 1.0, 1.0]]


class TestOneHot:
    def test_encoding(self):
        Y = one_hot([0, 2, 1], 3)
        assert Y.to_rows() == [[1, 0, 0], [0, 0, 1], [0, 1, 0]]

    def test_range_checked(self):
        with pytest.raises(LabelRangeError):
            one_hot([0, 3], 3)
        with pytest.raises(LabelRangeError):
            one_hot([-1], 3)

    def test_label_range_is_a_value_error_too(self):
        assert issubclass(LabelRangeError, ValueError)
        assert issubclass(LabelRangeError, DataError)


class TestLabeledDataset:
    def _xy(self):
        X = DenseMatrix(2, 3, [0.1] * 6)
        Y = one_hot([0, 1], 2)
        return X, Y

    def test_valid_construction(self):
        X, Y = self._xy()
        ds = LabeledDataset(X, Y, (0, 1), 2)
        assert ds.sample_count == 2 and ds.input_dim == 3

    def test_misaligned_rejected(self):
        X, Y = self._xy()
        with pytest.raises(ValueError):
            LabeledDataset(X, Y, (0,), 2)
        with pytest.raises(ValueError):
            LabeledDataset(X, one_hot([0], 2), (0, 1), 2)

    def test_non_one_hot_rejected(self):
        X, _ = self._xy()
        bad = DenseMatrix(2, 2, [1.0, 0.0, 0.5, 0.5])
        with pytest.raises(ValueError):
            LabeledDataset(X, bad, (0, 1), 2)

    def test_label_row_disagreement_rejected(self):
        X, Y = self._xy()
        with pytest.raises(ValueError):
            LabeledDataset(X, Y, (1, 0), 2)


class TestDirectoryLoading:
    def _write_split(self, d, img_name, lab_name, n=4, gz=False):
        suffix = ".gz" if gz else ""
        img = IdxImages(n, 1, 2, bytes(range(2 * n)))
        write_idx_images(d / (img_name + suffix), img)
        write_idx_labels(d / (lab_name + suffix), [i % 3 for i in range(n)])

    def test_load_labeled(self, tmp_path):
        self._write_split(tmp_path, TRAIN_IMAGES, TRAIN_LABELS)
        ds = load_labeled(tmp_path / TRAIN_IMAGES, tmp_path / TRAIN_LABELS, n_classes=3)
        assert ds.sample_count == 4
        assert ds.labels == (0, 1, 2, 0)

    def test_count_mismatch(self, tmp_path):
        write_idx_images(tmp_path / TRAIN_IMAGES, IdxImages(2, 1, 2, bytes(4)))
        write_idx_labels(tmp_path / TRAIN_LABELS, [0])
        with pytest.raises(DataError):
            load_labeled(tmp_path / TRAIN_IMAGES, tmp_path / TRAIN_LABELS, 3)

    def test_split_names(self, tmp_path):
        self._write_split(tmp_path, TRAIN_IMAGES, TRAIN_LABELS)
        self._write_split(tmp_path, TEST_IMAGES, TEST_LABELS, n=2)
        assert load_dataset_dir(tmp_path, "train", 3).sample_count == 4
        assert load_dataset_dir(tmp_path, "t10k", 3).sample_count == 2

    def test_gz_fallback(self, tmp_path):
        self._write_split(tmp_path, TRAIN_IMAGES, TRAIN_LABELS, gz=True)
        ds = load_dataset_dir(tmp_path, "train", 3)
        assert ds.sample_count == 4

    def test_missing_names_listed(self, tmp_path):
        with pytest.raises(MissingDataError) as exc:
            load_dataset_dir(tmp_path, "train", 3)
        assert TRAIN_IMAGES in str(exc.value)

    def test_unknown_split(self, tmp_path):
        with pytest.raises(ValueError):
            load_dataset_dir(tmp_path, "holdout", 3)


class TestSubsample:
    def _dataset(self, n=10):
        img = IdxImages(n, 1, 2, bytes(range(2 * n)))
        X = normalize_pixels(img)
        labels = [i % 2 for i in range(n)]
        return LabeledDataset(X, one_hot(labels, 2), tuple(labels), 2)

    def test_deterministic(self):
        ds = self._dataset()
        a = subsample(ds, 4, seed=5)
        b = subsample(ds, 4, seed=5)
        assert a.X.tobytes() == b.X.tobytes()
        assert a.labels == b.labels
        assert a.sample_count == 4

    def test_seed_changes_selection(self):
        ds = self._dataset()
        assert subsample(ds, 4, seed=5).labels != subsample(ds, 4, seed=6).labels or \
            subsample(ds, 4, seed=5).X.tobytes() != subsample(ds, 4, seed=6).X.tobytes()

    def test_rows_stay_aligned(self):
        ds = self._dataset()
        out = subsample(ds, 6, seed=1)
        for i, lab in enumerate(out.labels):
            assert out.Y[i, lab] == 1.0

    def test_count_validated(self):
        ds = self._dataset()
        with pytest.raises(ValueError):
            subsample(ds, 11, seed=0)
        with pytest.raises(ValueError):
            subsample(ds, 0, seed=0)


class TestSynthetic:
    def test_deterministic(self):
        a = synthetic_dataset(30, 8, 3, seed=9)
        b = synthetic_dataset(30, 8, 3, seed=9)
        assert a.X.tobytes() == b.X.tobytes() and a.labels == b.labels

    def test_shapes_and_ranges(self):
        ds = synthetic_dataset(25, 6, 4, seed=2, noise=0.3)
        assert ds.sample_count == 25 and ds.input_dim == 6
        assert set(ds.labels) == {0, 1, 2, 3}
        for row in ds.X.to_rows():
            assert all(0.0 <= v <= 1.0 for v in row)

    def test_labels_cycle_through_classes(self):
        ds = synthetic_dataset(9, 5, 3, seed=1)
        assert ds.labels == (0, 1, 2, 0, 1, 2, 0, 1, 2)

    def test_classes_are_learnable(self):
        """Class templates must be separable enough to train on; a nearest
        class-mean probe should beat chance by a wide margin."""
        ds = synthetic_dataset(120, 10, 3, seed=4, noise=0.1)
        rows = ds.X.to_rows()
        means = {}
        for c in range(3):
            members = [rows[i] for i in range(120) if ds.labels[i] == c]
            means[c] = [sum(col) / len(members) for col in zip(*members)]
        correct = 0
        for i in range(120):
            dists = {
                c: sum((a - b) ** 2 for a, b in zip(rows[i], mu))
                for c, mu in means.items()
            }
            if min(dists, key=dists.get) == ds.labels[i]:
                correct += 1
        assert correct / 120 >= 0.95

    def test_holdout_shares_templates(self):
        """Train and validation come from one draw, so class means learned
        on train must transfer to validation."""
        train, val = synthetic_holdout(60, 60, 10, 3, seed=8, noise=0.1)
        assert train.sample_count == 60 and val.sample_count == 60
        rows = train.X.to_rows()
        means = []
        for c in range(3):
            members = [rows[i] for i in range(60) if train.labels[i] == c]
            means.append([sum(col) / len(members) for col in zip(*members)])
        vrows = val.X.to_rows()
        correct = 0
        for i in range(60):
            dists = [sum((a - b) ** 2 for a, b in zip(vrows[i], mu)) for mu in means]
            if dists.index(min(dists)) == val.labels[i]:
                correct += 1
        assert correct / 60 >= 0.9

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            synthetic_dataset(0, 5, 2, seed=0)
        with pytest.raises(ValueError):
            synthetic_dataset(10, 0, 2, seed=0)
        with pytest.raises(ValueError):
            synthetic_dataset(10, 5, 0, seed=0)
