import numpy as np
import pytest
from PIL import Image


def write_png(path, array):
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(array).save(path)


def write_jpg(path, array):
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(array).save(path, quality=95)


def random_rgb(rng, h, w):
    return rng.integers(0, 255, size=(h, w, 3), dtype=np.uint8)


@pytest.fixture
def ade20k_root(tmp_path):
    root = tmp_path / "ade20k"
    rng = np.random.default_rng(0)
    for split in ("training", "validation"):
        for name in ("img_b", "img_a"):
            write_jpg(root / "images" / split / f"{name}.jpg", random_rgb(rng, 32, 40))
            label = rng.integers(0, 151, size=(32, 40)).astype(np.uint8)
            label[0, 0] = 0      # unlabeled
            label[0, 1] = 1      # first class
            label[0, 2] = 150    # last class
            write_png(root / "annotations" / split / f"{name}.png", label)
    return root


@pytest.fixture
def voc_root(tmp_path):
    root = tmp_path / "voc"
    rng = np.random.default_rng(1)
    ids = ["2007_0001", "2007_0002"]
    for split in ("train", "val"):
        listing = root / "ImageSets" / "Segmentation" / f"{split}.txt"
        listing.parent.mkdir(parents=True, exist_ok=True)
        listing.write_text("\n".join(ids) + "\n")
    for i in ids:
        write_jpg(root / "JPEGImages" / f"{i}.jpg", random_rgb(rng, 24, 36))
        label = rng.integers(0, 21, size=(24, 36)).astype(np.uint8)
        label[0, :] = 255    # border
        write_png(root / "SegmentationClass" / f"{i}.png", label)
    return root


@pytest.fixture
def cityscapes_root(tmp_path):
    root = tmp_path / "cityscapes"
    rng = np.random.default_rng(2)
    for split in ("train", "val"):
        for city, stem in (("aacity", "aacity_000000_000019"), ("bbcity", "bbcity_000001_000019")):
            write_png(
                root / "leftImg8bit" / split / city / f"{stem}_leftImg8bit.png",
                random_rgb(rng, 64, 128),
            )
            label = rng.integers(0, 34, size=(64, 128)).astype(np.uint8)
            label[0, 0] = 7     # road -> train id 0
            label[0, 1] = 0     # unlabeled -> ignore
            write_png(root / "gtFine" / split / city / f"{stem}_gtFine_labelIds.png", label)
    return root


@pytest.fixture
def gta5_root(tmp_path):
    root = tmp_path / "gta5"
    rng = np.random.default_rng(3)
    for name in ("00001", "00002"):
        write_png(root / "images" / f"{name}.png", random_rgb(rng, 48, 64))
        label = rng.integers(0, 34, size=(48, 64)).astype(np.uint8)
        label[0, 0] = 7
        write_png(root / "labels" / f"{name}.png", label)
    return root
