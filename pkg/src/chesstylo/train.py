"""Episodic trainer: sample N x M games, window to fixed length, run the
move extractor and game encoder, and optimize the GE2E objective with
momentum SGD on a halving learning-rate schedule."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .checkpoint import load_checkpoint, save_checkpoint
from .encoder import EncoderConfig, GameEncoder
from .encoding import NUM_CHANNELS, PackedGame, pack_game
from .extractor import ExtractorConfig, MoveFeatureExtractor
from .ge2e import GE2ECriterion

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    n_players: int = 40
    m_games: int = 20
    window: int = 32
    lr0: float = 0.01
    momentum: float = 0.9
    halve_every: int = 40_000
    w0: float = 10.0
    b0: float = -5.0
    wb_grad_scale: float = 0.01
    seed: int = 0
    max_steps: int = 0
    checkpoint_every: int = 1000
    val_every: int = 250
    val_episodes: int = 4
    extractor: ExtractorConfig = field(default_factory=ExtractorConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)

    def __post_init__(self):
        if self.n_players < 2 or self.m_games < 2:
            raise ValueError("need n_players >= 2 and m_games >= 2")
        for name in ("window", "lr0", "momentum", "wb_grad_scale", "halve_every"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if isinstance(self.extractor, dict):
            self.extractor = ExtractorConfig(**self.extractor)
        if isinstance(self.encoder, dict):
            self.encoder = EncoderConfig(**self.encoder)
        if self.encoder.feature_dim != self.extractor.output_dim:
            raise ValueError("encoder.feature_dim must equal extractor.output_dim")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict, overrides: dict | None = None) -> "TrainConfig":
        merged = dict(data)
        if overrides:
            for key, value in overrides.items():
                if value is not None:
                    merged[key] = value
        unknown = set(merged) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**merged)

    @classmethod
    def from_file(cls, path, overrides: dict | None = None) -> "TrainConfig":
        return cls.from_dict(json.loads(Path(path).read_text()), overrides)

    def hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


def learning_rate(step: int, config: TrainConfig) -> float:
    """lr0 halved every halve_every steps; piecewise constant."""
    if step < 0:
        raise ValueError("step must be >= 0")
    return config.lr0 * 0.5 ** (step // config.halve_every)


class CorpusIndex:
    """Per-player packed game sequences for one split partition."""

    def __init__(self, players: dict[str, list[PackedGame]]):
        self.players = {pid: games for pid, games in players.items() if games}

    @classmethod
    def build(cls, records, manifest: dict, part: str = "train") -> "CorpusIndex":
        wanted: dict[str, set[str]] = {
            pid: set(split[part]) for pid, split in manifest["players"].items()}
        players: dict[str, list[PackedGame]] = {pid: [] for pid in wanted}
        for rec in records:
            for pid in (rec.white_id, rec.black_id):
                if pid in wanted and rec.game_id in wanted[pid]:
                    packed = pack_game(rec, pid)
                    if len(packed):
                        players[pid].append(packed)
        return cls(players)

    def eligible_players(self, m_games: int) -> list[str]:
        return sorted(pid for pid, games in self.players.items()
                      if len(games) >= m_games)


def _window_episode(games: list[PackedGame], window: int,
                    rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    planes = np.zeros((len(games), window, NUM_CHANNELS, 8, 8), dtype=np.float32)
    mask = np.zeros((len(games), window), dtype=bool)
    for g, packed in enumerate(games):
        n = len(packed)
        if n > window:
            start = int(rng.integers(0, n - window + 1))
            planes[g] = packed.to_planes(start, window)
            mask[g] = True
        else:
            planes[g, :n] = packed.to_planes()
            mask[g, :n] = True
    return planes, mask


def sample_episode(index: CorpusIndex, config: TrainConfig,
                   rng: np.random.Generator):
    """Draw N distinct players, M distinct games each, and window each game.

    Returns (planes (N, M, W, 34, 8, 8), mask (N, M, W), player_ids).
    """
    eligible = index.eligible_players(config.m_games)
    if len(eligible) < config.n_players:
        raise ValueError(
            f"need {config.n_players} players with >= {config.m_games} games, "
            f"found {len(eligible)}")
    player_ids = [eligible[i] for i in
                  rng.choice(len(eligible), size=config.n_players, replace=False)]
    games = []
    for pid in player_ids:
        pool = index.players[pid]
        picks = rng.choice(len(pool), size=config.m_games, replace=False)
        games.extend(pool[i] for i in picks)
    planes, mask = _window_episode(games, config.window, rng)
    shape = (config.n_players, config.m_games, config.window)
    return (planes.reshape(shape + (NUM_CHANNELS, 8, 8)),
            mask.reshape(shape), player_ids)


class Trainer:
    """Owns all mutable parameters; one instance per training run."""

    def __init__(self, config: TrainConfig, corpus: CorpusIndex,
                 val_corpus: CorpusIndex | None = None):
        self.config = config
        self.corpus = corpus
        torch.manual_seed(config.seed)
        self.extractor = MoveFeatureExtractor(config.extractor)
        self.encoder = GameEncoder(config.encoder)
        self.criterion = GE2ECriterion(config.w0, config.b0, config.wb_grad_scale)
        self.optimizer = torch.optim.SGD(self.parameters(), lr=config.lr0,
                                         momentum=config.momentum)
        self.rng = np.random.default_rng(config.seed)
        self.step = 0
        self._val_episodes = []
        if val_corpus is not None and val_corpus.players:
            val_rng = np.random.default_rng(config.seed + 1)
            for _ in range(config.val_episodes):
                try:
                    planes, mask, _ = sample_episode(val_corpus, config, val_rng)
                except ValueError:
                    break
                self._val_episodes.append((torch.from_numpy(planes),
                                           torch.from_numpy(mask)))

    def parameters(self):
        yield from self.extractor.parameters()
        yield from self.encoder.parameters()
        yield from self.criterion.parameters()

    def named_parameters(self):
        for prefix, module in (("extractor", self.extractor),
                               ("encoder", self.encoder),
                               ("criterion", self.criterion)):
            for name, p in module.named_parameters():
                yield f"{prefix}.{name}", p

    def _embed_episode(self, planes: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        N, M, W = planes.shape[:3]
        features = self.extractor(planes.reshape(N * M * W, NUM_CHANNELS, 8, 8))
        features = features.reshape(N * M, W, -1)
        emb = self.encoder(features, mask.reshape(N * M, W))
        return emb.reshape(N, M, -1)

    def train_step(self, episode) -> dict:
        planes, mask, _ = episode
        if isinstance(planes, np.ndarray):
            planes = torch.from_numpy(planes)
            mask = torch.from_numpy(mask)
        self.extractor.train()
        self.encoder.train()
        lr = learning_rate(self.step, self.config)
        for group in self.optimizer.param_groups:
            group["lr"] = lr
        self.optimizer.zero_grad()
        emb = self._embed_episode(planes, mask)
        loss = self.criterion(emb)
        if not torch.isfinite(loss):
            raise FloatingPointError(
                f"non-finite loss at step {self.step}: {loss.item()}; "
                f"w={self.criterion.w.item()}, b={self.criterion.b.item()}")
        loss.backward()
        grad_norm = torch.sqrt(sum((p.grad ** 2).sum()
                                   for p in self.parameters() if p.grad is not None))
        self.optimizer.step()
        self.criterion.clamp_w()
        self.step += 1
        return {"step": self.step, "loss": float(loss.detach()), "lr": lr,
                "w": float(self.criterion.w.detach()),
                "b": float(self.criterion.b.detach()),
                "grad_norm": float(grad_norm)}

    @torch.no_grad()
    def validation_loss(self) -> float | None:
        if not self._val_episodes:
            return None
        self.extractor.eval()
        self.encoder.eval()
        losses = [float(self.criterion(self._embed_episode(p, m)))
                  for p, m in self._val_episodes]
        return float(np.mean(losses))

    def train(self, max_steps: int | None = None, metrics_path=None,
              ckpt_dir=None) -> list[dict]:
        max_steps = self.config.max_steps if max_steps is None else max_steps
        ckpt_dir = Path(ckpt_dir) if ckpt_dir else None
        metrics_fh = open(metrics_path, "a") if metrics_path else None
        metric_log = []
        try:
            while self.step < max_steps:
                episode = sample_episode(self.corpus, self.config, self.rng)
                try:
                    metrics = self.train_step(episode)
                except FloatingPointError:
                    if ckpt_dir:
                        self.save(ckpt_dir / f"diagnostic-step{self.step}.ckpt")
                    raise
                if self.step % self.config.val_every == 0 or self.step == max_steps:
                    val = self.validation_loss()
                    if val is not None:
                        metrics["val_loss"] = val
                metric_log.append(metrics)
                if metrics_fh:
                    metrics_fh.write(json.dumps(metrics) + "\n")
                    metrics_fh.flush()
                if ckpt_dir and (self.step % self.config.checkpoint_every == 0
                                 or self.step == max_steps):
                    self.save(ckpt_dir / f"step{self.step:07d}.ckpt")
            if ckpt_dir and (max_steps == 0 or not any(ckpt_dir.glob("*.ckpt"))):
                self.save(ckpt_dir / f"step{self.step:07d}.ckpt")
        finally:
            if metrics_fh:
                metrics_fh.close()
        return metric_log

    # ---- persistence ----

    def save(self, path) -> None:
        arrays = {}
        for prefix, module in (("extractor", self.extractor),
                               ("encoder", self.encoder),
                               ("criterion", self.criterion)):
            for name, tensor in module.state_dict().items():
                arrays[f"{prefix}.{name}"] = tensor.detach().cpu().numpy()
        state_by_name = {}
        for name, p in self.named_parameters():
            buf = self.optimizer.state.get(p, {}).get("momentum_buffer")
            if buf is not None:
                arrays[f"momentum.{name}"] = buf.detach().cpu().numpy()
                state_by_name[name] = True
        manifest = {
            "step": self.step,
            "config": self.config.to_dict(),
            "config_hash": self.config.hash(),
            "w": float(self.criterion.w.detach()),
            "b": float(self.criterion.b.detach()),
            "rng_state": json.dumps(self.rng.bit_generator.state),
        }
        save_checkpoint(path, manifest, arrays)

    def load(self, path) -> None:
        manifest, arrays = load_checkpoint(path)
        if manifest["config_hash"] != self.config.hash():
            raise ValueError(f"checkpoint {path} was written with a different config")
        for prefix, module in (("extractor", self.extractor),
                               ("encoder", self.encoder),
                               ("criterion", self.criterion)):
            state = {name: torch.from_numpy(arrays[f"{prefix}.{name}"])
                     for name in module.state_dict()}
            module.load_state_dict(state)
        for name, p in self.named_parameters():
            key = f"momentum.{name}"
            if key in arrays:
                self.optimizer.state[p] = {
                    "momentum_buffer": torch.from_numpy(arrays[key].copy())}
        self.step = manifest["step"]
        self.rng.bit_generator.state = json.loads(manifest["rng_state"])

    @classmethod
    def resume(cls, path, corpus: CorpusIndex,
               val_corpus: CorpusIndex | None = None) -> "Trainer":
        manifest, _ = load_checkpoint(path)
        config = TrainConfig.from_dict(manifest["config"])
        trainer = cls(config, corpus, val_corpus)
        trainer.load(path)
        return trainer


def load_model(path) -> tuple[MoveFeatureExtractor, GameEncoder, GE2ECriterion, TrainConfig]:
    """Load a checkpoint for inference (evaluation mode)."""
    manifest, arrays = load_checkpoint(path)
    config = TrainConfig.from_dict(manifest["config"])
    extractor = MoveFeatureExtractor(config.extractor)
    encoder = GameEncoder(config.encoder)
    criterion = GE2ECriterion(config.w0, config.b0, config.wb_grad_scale)
    for prefix, module in (("extractor", extractor), ("encoder", encoder),
                           ("criterion", criterion)):
        state = {name: torch.from_numpy(arrays[f"{prefix}.{name}"])
                 for name in module.state_dict()}
        module.load_state_dict(state)
    extractor.eval()
    encoder.eval()
    return extractor, encoder, criterion, config
