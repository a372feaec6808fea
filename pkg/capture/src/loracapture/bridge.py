"""Pipeline bridges: one protocol, a diffusers implementation, and a
deterministic synthetic pipeline for offline tests.

A bridge exposes three operations: seeded initial latents, a single
denoising step with a given set of (adapter, scale) activations, and a
latent-to-RGB decode. The capture and apply loops are written against the
protocol only, so their trace/schedule handling is identical for both.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import List, Protocol, Sequence, Tuple

import numpy as np

from .config import CaptureConfig
from .errors import ResourceError, UpstreamError

# (adapter_id, scale) pairs active for one step; empty means the bare base model.
Activations = Sequence[Tuple[str, float]]


class PipelineBridge(Protocol):
    def initial_latent(self, seed: int) -> np.ndarray: ...

    def denoise_step(self, latent: np.ndarray, t: int, total_steps: int, adapters: Activations) -> np.ndarray: ...

    def decode(self, latent: np.ndarray) -> np.ndarray:
        """Latent -> RGB float32 (3, H, W) in [0, 1]."""
        ...


def downsample(rgb: np.ndarray, height: int, width: int) -> np.ndarray:
    """Area-mean downsample when the factors divide, index sampling otherwise."""
    c, h, w = rgb.shape
    if h % height == 0 and w % width == 0:
        fh, fw = h // height, w // width
        return rgb.reshape(c, height, fh, width, fw).mean(axis=(2, 4)).astype(np.float32)
    ys = (np.arange(height) * h // height).astype(int)
    xs = (np.arange(width) * w // width).astype(int)
    return rgb[:, ys][:, :, xs].astype(np.float32)


def _field_seed(tag: str) -> np.uint64:
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    return np.uint64(int.from_bytes(digest[:8], "little"))


class SyntheticBridge:
    """Tiny seeded numpy pipeline with the same step semantics as the real one.

    Each adapter id maps to a deterministic displacement field; a step pulls
    the latent toward the base target plus the scaled adapter displacements.
    Zero-scale activations reproduce the bare base model exactly.
    """

    LATENT_CHANNELS = 4

    def __init__(self, config: CaptureConfig):
        self.size = config.latent_size
        self.base_field = self._field(f"base::{config.base_model or 'synthetic'}")
        self._fields = {}

    def _field(self, tag: str) -> np.ndarray:
        rng = np.random.Generator(np.random.Philox(key=_field_seed(tag)))
        return rng.standard_normal((self.LATENT_CHANNELS, self.size, self.size)).astype(np.float64)

    def _adapter_field(self, adapter_id: str) -> np.ndarray:
        if adapter_id not in self._fields:
            self._fields[adapter_id] = self._field(f"adapter::{adapter_id}")
        return self._fields[adapter_id]

    def initial_latent(self, seed: int) -> np.ndarray:
        rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
        return rng.standard_normal((self.LATENT_CHANNELS, self.size, self.size))

    def denoise_step(self, latent: np.ndarray, t: int, total_steps: int, adapters: Activations) -> np.ndarray:
        target = self.base_field.copy()
        for adapter_id, scale in adapters:
            target += scale * self._adapter_field(adapter_id)
        pull = 0.5 * t / total_steps
        return latent + pull * (target - latent)

    def decode(self, latent: np.ndarray) -> np.ndarray:
        mixed = np.stack(
            [
                latent[0] - latent[1],
                latent[1] + latent[3],
                latent[2] - latent[3],
            ]
        )
        rgb = 0.5 * (1.0 + np.tanh(mixed))
        return np.repeat(np.repeat(rgb, 8, axis=1), 8, axis=2).astype(np.float32)


class DiffusersBridge:
    """Real pipeline bridge. Loads a text-to-image diffusers pipeline, keeps
    both adapters registered, and toggles them per step via set_adapters."""

    def __init__(self, config: CaptureConfig):
        try:
            import torch
            from diffusers import AutoPipelineForText2Image
        except ImportError as exc:
            raise UpstreamError(
                "the diffusers bridge needs torch and diffusers installed "
                "(pip install 'loracapture[diffusers]')"
            ) from exc
        self._torch = torch
        self.config = config
        try:
            self.pipe = AutoPipelineForText2Image.from_pretrained(
                config.base_model, torch_dtype=torch.float16 if torch.cuda.is_available() else torch.float32
            )
            if torch.cuda.is_available():
                self.pipe = self.pipe.to("cuda")
            self.pipe.load_lora_weights(config.content_lora, adapter_name="content")
            self.pipe.load_lora_weights(config.style_lora, adapter_name="style")
        except MemoryError as exc:
            raise ResourceError(
                "pipeline did not fit in memory; lower decode_height/decode_width or use a smaller base model"
            ) from exc
        except Exception as exc:  # model resolution / download / format failures
            raise UpstreamError(f"could not load pipeline or adapters: {exc}") from exc
        self.pipe.scheduler.set_timesteps(config.steps)
        self._prompt_embeds = None

    def _device(self):
        return self.pipe._execution_device

    def _embeds(self):
        if self._prompt_embeds is None:
            self._prompt_embeds = self.pipe.encode_prompt(
                self.config.prompt, self._device(), 1, do_classifier_free_guidance=False
            )
        return self._prompt_embeds

    def initial_latent(self, seed: int) -> np.ndarray:
        torch = self._torch
        unet = self.pipe.unet
        size = unet.config.sample_size
        generator = torch.Generator(device="cpu").manual_seed(seed)
        latent = torch.randn(
            (1, unet.config.in_channels, size, size), generator=generator, dtype=torch.float32
        )
        latent = latent * self.pipe.scheduler.init_noise_sigma
        return latent.numpy()[0].astype(np.float64)

    def _set_adapters(self, adapters: Activations) -> None:
        if adapters:
            names = [name for name, _ in adapters]
            weights = [scale for _, scale in adapters]
            self.pipe.set_adapters(names, adapter_weights=weights)
            self.pipe.enable_lora()
        else:
            self.pipe.disable_lora()

    def denoise_step(self, latent: np.ndarray, t: int, total_steps: int, adapters: Activations) -> np.ndarray:
        torch = self._torch
        self._set_adapters(adapters)
        timestep = self.pipe.scheduler.timesteps[t - 1]
        sample = torch.from_numpy(latent[None].astype(np.float32)).to(self._device())
        with torch.no_grad():
            model_input = self.pipe.scheduler.scale_model_input(sample, timestep)
            noise_pred = self.pipe.unet(
                model_input, timestep, encoder_hidden_states=self._embeds()[0]
            ).sample
            out = self.pipe.scheduler.step(noise_pred, timestep, sample).prev_sample
        return out.cpu().numpy()[0].astype(np.float64)

    def decode(self, latent: np.ndarray) -> np.ndarray:
        torch = self._torch
        sample = torch.from_numpy(latent[None].astype(np.float32)).to(self._device())
        with torch.no_grad():
            image = self.pipe.vae.decode(sample / self.pipe.vae.config.scaling_factor).sample
        rgb = ((image[0].float().cpu().numpy() + 1.0) / 2.0).clip(0.0, 1.0)
        return rgb.astype(np.float32)


def make_bridge(config: CaptureConfig) -> PipelineBridge:
    if config.bridge == "synthetic":
        return SyntheticBridge(config)
    return DiffusersBridge(config)
