import numpy as np
import pytest
import torch

from segbench.encoders.checkpoint import CheckpointError, canonical_keys, load_checkpoint
from segbench.encoders.spec import EncoderSpec, get_encoder_spec, load_registry
from segbench.encoders.vit import VisionTransformer, encode, set_trainable


def small_encoder(patch=16, grid=4, cls=True):
    torch.manual_seed(0)
    return VisionTransformer(depth=2, width=32, heads=4, patch_size=patch,
                             grid_size=grid, has_class_token=cls)


class TestEncode:
    def test_grid_shape_512_p16(self):
        enc = VisionTransformer(depth=1, width=16, heads=2, patch_size=16, grid_size=32)
        tokens = encode(enc, torch.randn(3, 512, 512))
        assert tokens.shape == (32, 32, 16)

    def test_grid_shape_512_p8_quadruples_tokens(self):
        enc8 = VisionTransformer(depth=1, width=16, heads=2, patch_size=8, grid_size=64)
        tokens8 = encode(enc8, torch.randn(3, 512, 512))
        assert tokens8.shape == (64, 64, 16)
        assert tokens8.shape[0] * tokens8.shape[1] == 4 * 32 * 32

    def test_grid_shape_1024_p16(self):
        enc = VisionTransformer(depth=1, width=16, heads=2, patch_size=16, grid_size=32)
        tokens = encode(enc, torch.randn(3, 1024, 1024))
        assert tokens.shape == (64, 64, 16)

    def test_indivisible_dims_rejected(self):
        enc = small_encoder()
        with pytest.raises(ValueError, match="divisible"):
            encode(enc, torch.randn(3, 65, 64))

    def test_rectangular_images_supported(self):
        enc = small_encoder(patch=16, grid=4)
        tokens = encode(enc, torch.randn(3, 32, 64))
        assert tokens.shape == (2, 4, 32)

    def test_class_token_excluded_from_grid(self):
        with_cls = small_encoder(cls=True)
        tokens = with_cls(torch.randn(2, 3, 64, 64))
        assert tokens.shape == (2, 4, 4, 32)


class TestSetTrainable:
    def test_freeze_marks_all_params(self):
        enc = small_encoder()
        set_trainable(enc, freeze=True)
        assert all(not p.requires_grad for p in enc.parameters())
        set_trainable(enc, freeze=False)
        assert all(p.requires_grad for p in enc.parameters())


def make_native_archive(path, spec, seed=0):
    torch.manual_seed(seed)
    model = VisionTransformer(
        depth=spec.depth, width=spec.width, heads=spec.heads,
        patch_size=spec.native_patch, grid_size=spec.native_grid,
        has_class_token=spec.has_class_token,
    )
    arrays = {k: v.numpy() for k, v in model.state_dict().items()}
    np.savez(path, **arrays)
    return model


def make_timm_archive(path, spec, seed=0, extra=False, drop=None):
    torch.manual_seed(seed)
    model = VisionTransformer(
        depth=spec.depth, width=spec.width, heads=spec.heads,
        patch_size=spec.native_patch, grid_size=spec.native_grid,
        has_class_token=spec.has_class_token,
    )
    state = model.state_dict()
    arrays = {}
    for key, value in state.items():
        if key in ("patch_embed.weight", "patch_embed.bias"):
            arrays[key.replace("patch_embed.", "patch_embed.proj.")] = value.numpy()
        elif key in ("pos_embed", "cls_token", "cls_pos_embed"):
            continue
        else:
            arrays[key] = value.numpy()
    g = spec.native_grid
    pos = state["pos_embed"].reshape(g * g, spec.width)
    if spec.has_class_token:
        pos = torch.cat([state["cls_pos_embed"].reshape(1, -1), pos])
        arrays["cls_token"] = state["cls_token"].reshape(1, 1, -1).numpy()
    arrays["pos_embed"] = pos.unsqueeze(0).numpy()
    if extra:
        arrays["head.weight"] = np.zeros((10, spec.width), dtype=np.float32)
    if drop:
        arrays.pop(drop)
    np.savez(path, **arrays)
    return model


class TestLoadCheckpoint:
    def toy_spec(self, tmp_path, name_map="native", ref="w.npz", **overrides):
        fields = dict(
            name="testenc", depth=2, width=32, heads=4, native_patch=8,
            native_grid=4, variant="B", checkpoint_ref=str(tmp_path / ref),
            has_class_token=True, name_map=name_map,
        )
        fields.update(overrides)
        return EncoderSpec(**fields)

    def test_toy_vit_needs_no_archive(self):
        spec = get_encoder_spec("toy-vit")
        assert spec.checkpoint_ref is None
        enc = load_checkpoint(spec, target_patch=8, target_grid=8)
        tokens = encode(enc, torch.randn(3, 64, 64))
        assert tokens.shape == (8, 8, 64)

    def test_native_archive_roundtrip(self, tmp_path):
        spec = self.toy_spec(tmp_path)
        source = make_native_archive(tmp_path / "w.npz", spec)
        loaded = load_checkpoint(spec)
        for key, value in source.state_dict().items():
            assert torch.allclose(loaded.state_dict()[key], value)

    def test_timm_archive_roundtrip(self, tmp_path):
        spec = self.toy_spec(tmp_path, name_map="timm")
        source = make_timm_archive(tmp_path / "w.npz", spec)
        loaded = load_checkpoint(spec)
        assert torch.allclose(loaded.pos_embed, source.pos_embed)
        assert torch.allclose(loaded.cls_token, source.cls_token)
        assert torch.allclose(loaded.patch_embed.weight, source.patch_embed.weight)

    def test_missing_tensor_error_names_key(self, tmp_path):
        spec = self.toy_spec(tmp_path, name_map="timm")
        make_timm_archive(tmp_path / "w.npz", spec, drop="patch_embed.proj.weight")
        with pytest.raises(CheckpointError, match="patch_embed"):
            load_checkpoint(spec)

    def test_extra_tensors_warn_but_load(self, tmp_path):
        spec = self.toy_spec(tmp_path, name_map="timm")
        make_timm_archive(tmp_path / "w.npz", spec, extra=True)
        with pytest.warns(UserWarning, match="unmapped"):
            load_checkpoint(spec)

    def test_geometry_mismatch_rejected(self, tmp_path):
        archive_spec = self.toy_spec(tmp_path)
        make_native_archive(tmp_path / "w.npz", archive_spec)
        wrong = self.toy_spec(tmp_path, native_patch=16, native_grid=4)
        with pytest.raises(CheckpointError, match="geometry"):
            load_checkpoint(wrong)

    def test_missing_archive_file(self, tmp_path):
        spec = self.toy_spec(tmp_path, ref="absent.npz")
        with pytest.raises(CheckpointError, match="not found"):
            load_checkpoint(spec)

    def test_positional_grid_resized_to_target(self, tmp_path):
        # native grid 14, loaded for 512-pixel crops at patch 16 -> grid 32
        spec = self.toy_spec(tmp_path, native_grid=14)
        make_native_archive(tmp_path / "w.npz", spec)
        loaded = load_checkpoint(spec, target_patch=16, target_grid=512 // 16)
        assert loaded.pos_embed.shape == (32, 32, 32)
        assert loaded.patch_embed.weight.shape == (32, 3, 16, 16)

    def test_resized_model_encodes(self, tmp_path):
        spec = self.toy_spec(tmp_path, native_grid=14)
        make_native_archive(tmp_path / "w.npz", spec)
        loaded = load_checkpoint(spec, target_patch=16, target_grid=32)
        tokens = encode(loaded, torch.randn(3, 512, 512))
        assert tokens.shape == (32, 32, 32)


class TestRegistry:
    def test_registry_lists_benchmark_and_toy_models(self):
        registry = load_registry()
        for name in ("eva02", "dinov2", "sam", "toy-vit"):
            assert name in registry

    def test_specs_satisfy_invariants(self):
        registry = load_registry()
        for name in registry:
            for variant in registry[name]["variants"]:
                spec = get_encoder_spec(name, variant)
                assert spec.width % spec.heads == 0
                assert spec.native_patch > 0 and spec.native_grid > 0

    def test_unknown_model_rejected(self):
        with pytest.raises(KeyError, match="unknown encoder"):
            get_encoder_spec("resnet50")

    def test_width_heads_invariant_enforced(self):
        with pytest.raises(ValueError, match="divisible"):
            EncoderSpec(name="bad", depth=1, width=30, heads=4, native_patch=16,
                        native_grid=14, variant="B", checkpoint_ref=None)
