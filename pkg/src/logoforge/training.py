"""Adversarial training of the layout synthesizer.

Each step alternates one discriminator update (real pairs vs detached fakes,
for both the sequence and the image critic) with one encoder+generator
update that minimizes the non-saturating adversarial losses plus the
weighted overlap penalty. Gradients reach the generator and encoder through
both critics: directly through the box sequence, and through the
differentiable composition for the image path. The generator never sees
ground-truth boxes except through discriminator signals.
"""

from __future__ import annotations

import csv
import os
from dataclasses import asdict, dataclass, field

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from . import composition
from .composition import CANVAS_SIZE, GLYPH_SIZE
from .corpus import EmbeddingTable, LogoRecord, vocab_of_records
from .discriminators import (
    DiscriminatorConfig,
    ImageDiscriminator,
    SequenceDiscriminator,
)
from .encoding import ConditionEncoder, ConditionFeatures, EncoderConfig, VisualEncoder
from .generator import CoordinateGenerator, GeneratorConfig


@dataclass
class TrainConfig:
    # objective
    lambda_ol: float = 10.0       # weight on the per-pixel-normalized overlap loss
    lr_g: float = 2e-4
    lr_d: float = 2e-4
    betas: tuple[float, float] = (0.5, 0.999)
    batch_size: int = 32
    epochs: int = 10
    seed: int = 0
    # ablation switches
    no_text: bool = False
    no_img: bool = False
    no_seq_dis: bool = False
    no_img_dis: bool = False
    # model dimensions
    d_v: int = 128
    d_e: int = 64
    d_c: int = 128
    d_z: int = 64
    gen_hidden: int = 128
    seq_hidden: int = 64
    img_base: int = 32
    tile_channels: int = 32
    backbone: str = "small"      # "small" | "vgg19"
    pretrained_backbone: bool = False
    # bookkeeping
    checkpoint_every: int = 1    # epochs; 0 disables periodic checkpoints
    fid_every: int = 0           # epochs between proxy-FID evaluations; 0 = off
    test_fraction: float = 0.1

    def __post_init__(self):
        if isinstance(self.betas, list):
            self.betas = tuple(self.betas)
        if self.lambda_ol < 0:
            raise ValueError("lambda_ol must be >= 0")
        if self.no_seq_dis and self.no_img_dis:
            raise ValueError("at least one discriminator must stay enabled")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")


@dataclass
class LossReport:
    step: int
    loss_d_seq: float | None
    loss_d_img: float | None
    overlap_term: float
    loss_g_adv: float
    acc_d_seq: float | None
    acc_d_img: float | None

    def values(self):
        return [v for v in (self.loss_d_seq, self.loss_d_img, self.overlap_term,
                            self.loss_g_adv) if v is not None]


class LogoLayoutModel(nn.Module):
    """Encoder + generator bundle: text/glyphs (+ noise) -> box sequence."""

    def __init__(self, cfg: TrainConfig, vocab: dict[str, int],
                 embeddings: EmbeddingTable | None = None):
        super().__init__()
        self.cfg = cfg
        self.vocab = dict(vocab)
        enc_cfg = EncoderConfig(d_v=cfg.d_v, d_e=cfg.d_e, d_c=cfg.d_c,
                                backbone=cfg.backbone,
                                pretrained=cfg.pretrained_backbone,
                                use_text=not cfg.no_text,
                                use_img=not cfg.no_img)
        self.visual = VisualEncoder(enc_cfg)
        self.cond_encoder = ConditionEncoder(enc_cfg)
        self.embedding = nn.Embedding(len(vocab) + 1, cfg.d_e)
        if embeddings is not None:
            if embeddings.vectors.shape != (len(vocab) + 1, cfg.d_e):
                raise ValueError("embedding table shape does not match vocab/d_e")
            with torch.no_grad():
                self.embedding.weight.copy_(torch.as_tensor(embeddings.vectors))
        self.generator = CoordinateGenerator(
            GeneratorConfig(d_c=cfg.d_c, d_z=cfg.d_z, hidden=cfg.gen_hidden))

    def char_ids(self, chars) -> torch.Tensor:
        return torch.tensor([self.vocab.get(c, 0) for c in chars], dtype=torch.long)

    def condition(self, glyphs: torch.Tensor, char_ids: torch.Tensor) -> ConditionFeatures:
        f_v = self.visual(glyphs).sequence
        f_e = self.embedding(char_ids)
        return self.cond_encoder(f_v, f_e)

    def generate(self, glyphs: torch.Tensor, char_ids: torch.Tensor,
                 z: torch.Tensor) -> torch.Tensor:
        cond = self.condition(glyphs, char_ids)
        return self.generator(cond.sequence, z)


def records_to_tensors(records: list[LogoRecord], vocab: dict[str, int]):
    """Stack same-length records into training tensors."""
    n = len(records[0].glyphs)
    if any(len(r.glyphs) != n for r in records):
        raise ValueError("all records in a batch must share one sequence length")
    glyphs = torch.as_tensor(np.stack([r.glyphs_array() for r in records]))
    char_ids = torch.tensor([[vocab.get(g.char, 0) for g in r.glyphs]
                             for r in records], dtype=torch.long)
    boxes = torch.as_tensor(np.stack([r.boxes_array() for r in records]))
    logos = torch.as_tensor(np.stack([r.logo_image.astype(np.float32)
                                      for r in records]))
    return glyphs, char_ids, boxes, logos


def bucket_batches(records, batch_size: int, rng: np.random.Generator):
    """Deterministic shuffled batches, bucketed by sequence length."""
    by_len: dict[int, list[int]] = {}
    for i, r in enumerate(records):
        by_len.setdefault(len(r.glyphs), []).append(i)
    batches = []
    for n in sorted(by_len):
        idx = np.array(by_len[n])
        rng.shuffle(idx)
        for s in range(0, len(idx), batch_size):
            batches.append([records[i] for i in idx[s:s + batch_size]])
    order = rng.permutation(len(batches))
    return [batches[i] for i in order]


class Trainer:
    def __init__(self, cfg: TrainConfig, vocab: dict[str, int],
                 embeddings: EmbeddingTable | None = None, out_dir: str | None = None):
        torch.manual_seed(cfg.seed)
        self.cfg = cfg
        self.vocab = dict(vocab)
        self.out_dir = out_dir
        self.model = LogoLayoutModel(cfg, vocab, embeddings)
        dcfg = DiscriminatorConfig(d_c=cfg.d_c, seq_hidden=cfg.seq_hidden,
                                   img_base=cfg.img_base,
                                   tile_channels=cfg.tile_channels)
        self.d_seq = SequenceDiscriminator(dcfg)
        self.d_img = ImageDiscriminator(dcfg)
        self.opt_g = torch.optim.Adam(self.model.parameters(), lr=cfg.lr_g,
                                      betas=cfg.betas)
        d_params = []
        if not cfg.no_seq_dis:
            d_params += list(self.d_seq.parameters())
        if not cfg.no_img_dis:
            d_params += list(self.d_img.parameters())
        self.opt_d = torch.optim.Adam(d_params, lr=cfg.lr_d, betas=cfg.betas)
        self.noise_gen = torch.Generator().manual_seed(cfg.seed + 1)
        self.shuffle_rng = np.random.default_rng(cfg.seed + 2)
        self.epoch = 0
        self.global_step = 0
        self.history: list[LossReport] = []

    # -- one optimization step -------------------------------------------

    def train_step(self, batch: list[LogoRecord]) -> LossReport:
        cfg = self.cfg
        glyphs, char_ids, real_boxes, real_logos = records_to_tensors(batch, self.vocab)
        b = glyphs.shape[0]

        cond = self.model.condition(glyphs, char_ids)
        z = torch.randn(b, cfg.d_z, generator=self.noise_gen)
        fake_boxes = self.model.generator(cond.sequence, z)
        placed = composition.place_glyphs(glyphs, fake_boxes)
        fake_logo = composition.compose_canvas(placed)
        overlap = composition.overlap_loss(placed) / float(CANVAS_SIZE * CANVAS_SIZE)

        ones = torch.ones(b)
        zeros = torch.zeros(b)
        hol_d = cond.holistic.detach()

        d_total = torch.zeros(())
        loss_d_seq = acc_d_seq = None
        loss_d_img = acc_d_img = None
        if not cfg.no_seq_dis:
            lr_real = self.d_seq.logit(real_boxes, hol_d)
            lr_fake = self.d_seq.logit(fake_boxes.detach(), hol_d)
            part = F.binary_cross_entropy_with_logits(lr_real, ones) \
                + F.binary_cross_entropy_with_logits(lr_fake, zeros)
            d_total = d_total + part
            loss_d_seq = float(part.detach())
            acc_d_seq = float(((lr_real > 0).float().mean()
                               + (lr_fake <= 0).float().mean()) / 2)
        if not cfg.no_img_dis:
            li_real = self.d_img.logit(real_logos, hol_d)
            li_fake = self.d_img.logit(fake_logo.detach(), hol_d)
            part = F.binary_cross_entropy_with_logits(li_real, ones) \
                + F.binary_cross_entropy_with_logits(li_fake, zeros)
            d_total = d_total + part
            loss_d_img = float(part.detach())
            acc_d_img = float(((li_real > 0).float().mean()
                               + (li_fake <= 0).float().mean()) / 2)

        self.opt_d.zero_grad()
        d_total.backward()
        self.opt_d.step()

        g_adv = torch.zeros(())
        if not cfg.no_seq_dis:
            g_adv = g_adv + F.binary_cross_entropy_with_logits(
                self.d_seq.logit(fake_boxes, cond.holistic), ones)
        if not cfg.no_img_dis:
            g_adv = g_adv + F.binary_cross_entropy_with_logits(
                self.d_img.logit(fake_logo, cond.holistic), ones)
        overlap_term = cfg.lambda_ol * overlap.mean()
        g_loss = g_adv + overlap_term

        self.opt_g.zero_grad()
        self.opt_d.zero_grad()  # discard critic grads from the generator pass
        g_loss.backward()
        self.opt_g.step()

        self.global_step += 1
        report = LossReport(step=self.global_step,
                            loss_d_seq=loss_d_seq, loss_d_img=loss_d_img,
                            overlap_term=float(overlap_term.detach()),
                            loss_g_adv=float(g_adv.detach()),
                            acc_d_seq=acc_d_seq, acc_d_img=acc_d_img)
        if not all(np.isfinite(v) for v in report.values()):
            self._dump_diagnostics(batch, report)
            raise RuntimeError(
                f"non-finite loss at step {self.global_step}: {report}")
        self.history.append(report)
        return report

    def _dump_diagnostics(self, batch, report):
        path = os.path.join(self.out_dir or ".", f"diag_step{self.global_step}.npz")
        glyphs, char_ids, boxes, logos = records_to_tensors(batch, self.vocab)
        np.savez(path, glyphs=glyphs.numpy(), char_ids=char_ids.numpy(),
                 boxes=boxes.numpy(), logos=logos.numpy(),
                 report=np.array(str(report)))

    # -- epochs ------------------------------------------------------------

    def fit(self, train_records: list[LogoRecord],
            test_records: list[LogoRecord] | None = None) -> list[str]:
        cfg = self.cfg
        checkpoints = []
        metrics_path = None
        if self.out_dir:
            os.makedirs(self.out_dir, exist_ok=True)
            metrics_path = os.path.join(self.out_dir, "metrics.csv")
            if not os.path.exists(metrics_path):
                with open(metrics_path, "w", newline="") as fh:
                    csv.writer(fh).writerow(
                        ["step", "loss_d_seq", "loss_d_img", "overlap_term",
                         "loss_g_adv", "fid"])
        while self.epoch < cfg.epochs:
            batches = bucket_batches(train_records, cfg.batch_size, self.shuffle_rng)
            rows = []
            for batch in batches:
                rep = self.train_step(batch)
                rows.append([rep.step, rep.loss_d_seq, rep.loss_d_img,
                             rep.overlap_term, rep.loss_g_adv, ""])
            self.epoch += 1
            if cfg.fid_every and test_records and self.epoch % cfg.fid_every == 0:
                fid = self.evaluate_fid(test_records)
                if fid is not None:
                    rows[-1][-1] = f"{fid:.4f}"
            if metrics_path:
                with open(metrics_path, "a", newline="") as fh:
                    csv.writer(fh).writerows(rows)
            if self.out_dir and cfg.checkpoint_every \
                    and self.epoch % cfg.checkpoint_every == 0:
                path = os.path.join(self.out_dir, f"checkpoint_ep{self.epoch:03d}.pt")
                self.save_checkpoint(path)
                checkpoints.append(path)
            if self.out_dir and test_records:
                self._write_sample_grid(test_records)
        if self.out_dir:
            path = os.path.join(self.out_dir, "checkpoint_final.pt")
            self.save_checkpoint(path)
            checkpoints.append(path)
        return checkpoints

    @torch.no_grad()
    def generate_layouts(self, records: list[LogoRecord], seed: int = 0) -> list[torch.Tensor]:
        """One generated box sequence per record, deterministic under seed."""
        self.model.eval()
        out = []
        gen = torch.Generator().manual_seed(seed)
        for rec in records:
            glyphs, char_ids, _, _ = records_to_tensors([rec], self.vocab)
            z = torch.randn(1, self.cfg.d_z, generator=gen)
            out.append(self.model.generate(glyphs, char_ids, z)[0])
        self.model.train()
        return out

    @torch.no_grad()
    def compose_generated(self, records, seed: int = 0) -> list[np.ndarray]:
        layouts = self.generate_layouts(records, seed=seed)
        images = []
        for rec, boxes in zip(records, layouts):
            placed = composition.place_glyphs(
                torch.as_tensor(rec.glyphs_array()), boxes)
            images.append(composition.compose_canvas(placed).numpy())
        return images

    def evaluate_fid(self, test_records, seed: int = 0) -> float | None:
        from . import evaluation
        if len(test_records) < 2:
            return None  # covariance needs at least two images per set
        gen_imgs = self.compose_generated(test_records, seed=seed)
        ref_imgs = [r.logo_image for r in test_records]
        fid, _ = evaluation.evaluate_fid_is(gen_imgs, ref_imgs)
        return fid

    def _write_sample_grid(self, test_records, k: int = 8):
        from PIL import Image
        imgs = self.compose_generated(test_records[:k], seed=self.epoch)
        if not imgs:
            return
        cols = min(4, len(imgs))
        rows = (len(imgs) + cols - 1) // cols
        grid = np.zeros((rows * CANVAS_SIZE, cols * CANVAS_SIZE), dtype=np.uint8)
        for i, img in enumerate(imgs):
            r, c = divmod(i, cols)
            grid[r * CANVAS_SIZE:(r + 1) * CANVAS_SIZE,
                 c * CANVAS_SIZE:(c + 1) * CANVAS_SIZE] = \
                np.clip(np.round(img), 0, 255).astype(np.uint8)
        Image.fromarray(grid).save(
            os.path.join(self.out_dir, f"samples_ep{self.epoch:03d}.png"))

    # -- persistence -------------------------------------------------------

    def save_checkpoint(self, path: str) -> None:
        tmp = path + ".tmp"
        torch.save({
            "format": 1,
            "config": asdict(self.cfg),
            "vocab": self.vocab,
            "model": self.model.state_dict(),
            "d_seq": self.d_seq.state_dict(),
            "d_img": self.d_img.state_dict(),
            "opt_g": self.opt_g.state_dict(),
            "opt_d": self.opt_d.state_dict(),
            "epoch": self.epoch,
            "global_step": self.global_step,
            "noise_gen": self.noise_gen.get_state(),
            "shuffle_rng": self.shuffle_rng.bit_generator.state,
            "torch_rng": torch.get_rng_state(),
        }, tmp)
        os.replace(tmp, path)

    @classmethod
    def load_checkpoint(cls, path: str, out_dir: str | None = None) -> "Trainer":
        blob = torch.load(path, weights_only=False)
        cfg = TrainConfig(**blob["config"])
        trainer = cls(cfg, blob["vocab"], out_dir=out_dir)
        trainer.model.load_state_dict(blob["model"])
        trainer.d_seq.load_state_dict(blob["d_seq"])
        trainer.d_img.load_state_dict(blob["d_img"])
        trainer.opt_g.load_state_dict(blob["opt_g"])
        trainer.opt_d.load_state_dict(blob["opt_d"])
        trainer.epoch = blob["epoch"]
        trainer.global_step = blob["global_step"]
        trainer.noise_gen.set_state(blob["noise_gen"])
        trainer.shuffle_rng.bit_generator.state = blob["shuffle_rng"]
        torch.set_rng_state(blob["torch_rng"])
        return trainer


def train(records: list[LogoRecord], cfg: TrainConfig,
          out_dir: str | None = None,
          embeddings: EmbeddingTable | None = None) -> tuple[Trainer, list[str]]:
    """Split, train, checkpoint; returns the trainer and checkpoint paths."""
    from .corpus import split_dataset
    train_recs, test_recs = split_dataset(records, cfg.test_fraction, seed=cfg.seed)
    if not train_recs:
        raise ValueError("empty training split")
    vocab = vocab_of_records(records)
    trainer = Trainer(cfg, vocab, embeddings=embeddings, out_dir=out_dir)
    checkpoints = trainer.fit(train_recs, test_recs)
    return trainer, checkpoints
