"""Deterministic per-trial randomness via counter-based splitting.

Every trial owns an unbounded family of independent substreams derived from
``(master_seed, trial_index, chunk_index)`` placed directly into the Philox
counter words, so a trial's trajectory is a pure function of the master seed
and its index: scheduling order, batch size and worker count cannot change
it.  Draws happen in fixed-shape chunks of ``STREAM_CHUNK`` slots; within a
chunk the row layout is fixed (one row per node, then the fusion noise row,
with an optional fading prefix on chunk 0).
"""
from __future__ import annotations

import numpy as np

STREAM_CHUNK = 64

# Arbitrary fixed salt in the second key word, so the package's stream family
# cannot collide with another Philox user seeded with the same integer.
_KEY_SALT = 0x9E3779B97F4A7C15


class TrialStreams:
    """Chunked observation/noise/fading draws for a batch of trials."""

    def __init__(self, master_seed: int, n_nodes: int, with_fading: bool):
        self.master_seed = int(master_seed) & 0xFFFFFFFFFFFFFFFF
        self.n_nodes = n_nodes
        self.with_fading = with_fading
        self._bitgen = np.random.Philox(key=[self.master_seed, _KEY_SALT])
        self._gen = np.random.Generator(self._bitgen)
        self._state = self._bitgen.state

    def _reset(self, trial_index: int, chunk_index: int) -> None:
        st = self._state
        st["state"]["counter"][:] = (0, 0, trial_index, chunk_index)
        st["buffer_pos"] = 4
        st["has_uint32"] = 0
        st["uinteger"] = 0
        self._bitgen.state = st

    def draw_chunk(self, trial_index: int, chunk_index: int):
        """Draws for one trial and chunk.

        Returns ``(obs, fusion_noise, fading)`` where ``obs`` has shape
        ``(n_nodes, STREAM_CHUNK)`` of standard normals, ``fusion_noise``
        has shape ``(STREAM_CHUNK,)``, and ``fading`` is ``None`` except on
        chunk 0 of fading scenarios, where it holds ``n_nodes`` standard
        exponential draws.
        """
        self._reset(trial_index, chunk_index)
        fading = None
        if self.with_fading and chunk_index == 0:
            fading = self._gen.standard_exponential(self.n_nodes)
        block = self._gen.standard_normal((self.n_nodes + 1, STREAM_CHUNK))
        return block[:-1], block[-1], fading

    def draw_chunk_block(self, trial_indices: np.ndarray, chunk_index: int):
        """Stacked draws for many trials at one chunk index.

        Returns ``(obs, fusion_noise, fading)`` with shapes
        ``(n_trials, n_nodes, STREAM_CHUNK)``, ``(n_trials, STREAM_CHUNK)``
        and ``(n_trials, n_nodes)`` (or ``None``).
        """
        n = len(trial_indices)
        obs = np.empty((n, self.n_nodes, STREAM_CHUNK))
        noise = np.empty((n, STREAM_CHUNK))
        fading = None
        if self.with_fading and chunk_index == 0:
            fading = np.empty((n, self.n_nodes))
        for i, t in enumerate(trial_indices):
            o, z, f = self.draw_chunk(int(t), chunk_index)
            obs[i] = o
            noise[i] = z
            if fading is not None:
                fading[i] = f
        return obs, noise, fading
