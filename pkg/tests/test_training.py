import copy
import os

import numpy as np
import pytest
import torch

from logoforge.corpus import vocab_of_records
from logoforge.training import (
    LossReport,
    TrainConfig,
    Trainer,
    bucket_batches,
    records_to_tensors,
    train,
)
from conftest import tiny_train_config


def test_config_validation():
    with pytest.raises(ValueError):
        tiny_train_config(lambda_ol=-1.0)
    with pytest.raises(ValueError):
        tiny_train_config(no_seq_dis=True, no_img_dis=True)
    with pytest.raises(ValueError):
        tiny_train_config(batch_size=0)
    # single-discriminator ablations are legal
    tiny_train_config(no_seq_dis=True)
    tiny_train_config(no_img_dis=True)


def test_bucket_batches_group_by_length(tiny_corpus):
    rng = np.random.default_rng(0)
    batches = bucket_batches(tiny_corpus, 4, rng)
    seen = 0
    for b in batches:
        lengths = {len(r.glyphs) for r in b}
        assert len(lengths) == 1
        assert len(b) <= 4
        seen += len(b)
    assert seen == len(tiny_corpus)


def test_train_step_reports_finite_losses(tiny_corpus):
    cfg = tiny_train_config()
    trainer = Trainer(cfg, vocab_of_records(tiny_corpus))
    batch = [r for r in tiny_corpus if len(r.glyphs) == len(tiny_corpus[0].glyphs)][:4]
    rep = trainer.train_step(batch)
    assert isinstance(rep, LossReport)
    assert all(np.isfinite(v) for v in rep.values())
    assert rep.loss_d_seq is not None and rep.loss_d_img is not None


def test_zero_lambda_zeroes_overlap_term(tiny_corpus):
    cfg = tiny_train_config(lambda_ol=0.0)
    trainer = Trainer(cfg, vocab_of_records(tiny_corpus))
    rep = trainer.train_step(tiny_corpus[:2] if len(tiny_corpus[0].glyphs)
                             == len(tiny_corpus[1].glyphs) else tiny_corpus[:1])
    assert rep.overlap_term == 0.0


@pytest.mark.parametrize("flag,missing", [("no_seq_dis", "loss_d_seq"),
                                          ("no_img_dis", "loss_d_img")])
def test_ablation_drops_loss_term(tiny_corpus, flag, missing):
    cfg = tiny_train_config(**{flag: True})
    trainer = Trainer(cfg, vocab_of_records(tiny_corpus))
    rep = trainer.train_step(tiny_corpus[:1])
    assert getattr(rep, missing) is None
    other = "loss_d_img" if missing == "loss_d_seq" else "loss_d_seq"
    assert getattr(rep, other) is not None


def test_generator_update_blind_to_ground_truth_layout(tiny_corpus):
    # with the critics frozen, swapping the real layouts must not change
    # the encoder/generator update at all
    base = [r for r in tiny_corpus if len(r.glyphs) == len(tiny_corpus[0].glyphs)][:3]
    shuffled = copy.deepcopy(base)
    for rec in shuffled:
        rec.layout = list(reversed(rec.layout))
        rec.logo_image = rec.logo_image[::-1].copy()

    states = []
    for batch in (base, shuffled):
        cfg = tiny_train_config(seed=3)
        trainer = Trainer(cfg, vocab_of_records(tiny_corpus))
        trainer.opt_d.step = lambda: None  # freeze critics
        trainer.train_step(batch)
        states.append({k: v.clone() for k, v in trainer.model.state_dict().items()})
    for k in states[0]:
        assert torch.equal(states[0][k], states[1][k]), k


def test_checkpoint_round_trip_is_bit_identical(tmp_path, tiny_corpus):
    cfg = tiny_train_config(epochs=1, batch_size=8)
    vocab = vocab_of_records(tiny_corpus)
    trainer = Trainer(cfg, vocab, out_dir=str(tmp_path))
    trainer.fit(tiny_corpus)
    ckpt = os.path.join(str(tmp_path), "checkpoint_final.pt")
    restored = Trainer.load_checkpoint(ckpt)

    rec = tiny_corpus[0]
    glyphs, char_ids, _, _ = records_to_tensors([rec], vocab)
    z = torch.randn(1, cfg.d_z, generator=torch.Generator().manual_seed(9))
    trainer.model.eval(), restored.model.eval()
    with torch.no_grad():
        a = trainer.model.generate(glyphs, char_ids, z)
        b = restored.model.generate(glyphs, char_ids, z)
    assert torch.equal(a, b)


def test_resume_reproduces_uninterrupted_losses(tmp_path, tiny_corpus):
    vocab = vocab_of_records(tiny_corpus)

    full = Trainer(tiny_train_config(epochs=3, batch_size=8), vocab)
    full.fit(tiny_corpus)

    part_dir = tmp_path / "part"
    part = Trainer(tiny_train_config(epochs=1, batch_size=8), vocab,
                   out_dir=str(part_dir))
    part.fit(tiny_corpus)
    resumed = Trainer.load_checkpoint(str(part_dir / "checkpoint_final.pt"))
    resumed.cfg.epochs = 3
    resumed.fit(tiny_corpus)

    tail_full = [r for r in full.history if r.step > part.global_step]
    tail_resumed = resumed.history
    assert len(tail_full) == len(tail_resumed)
    for a, b in zip(tail_full, tail_resumed):
        assert a.step == b.step
        for va, vb in zip(a.values(), b.values()):
            assert abs(va - vb) < 1e-5


def test_two_epoch_smoke_writes_checkpoints_and_metrics(tmp_path, small_synth_corpus):
    cfg = tiny_train_config(epochs=2, batch_size=16, checkpoint_every=1, fid_every=1)
    trainer, ckpts = train(small_synth_corpus, cfg, out_dir=str(tmp_path))
    assert len(ckpts) >= 2
    assert all(os.path.exists(p) for p in ckpts)
    lines = (tmp_path / "metrics.csv").read_text().strip().split("\n")
    assert lines[0] == "step,loss_d_seq,loss_d_img,overlap_term,loss_g_adv,fid"
    assert len(lines) - 1 == trainer.global_step
    assert any(line.split(",")[-1] for line in lines[1:])  # fid tracked
    assert any(f.startswith("samples_ep") for f in os.listdir(tmp_path))


def test_non_finite_loss_aborts_with_diagnostics(tmp_path, tiny_corpus):
    cfg = tiny_train_config()
    trainer = Trainer(cfg, vocab_of_records(tiny_corpus), out_dir=str(tmp_path))
    with torch.no_grad():
        trainer.model.generator.head.weight.fill_(float("nan"))
    with pytest.raises(RuntimeError, match="non-finite"):
        trainer.train_step(tiny_corpus[:1])
    assert any(f.startswith("diag_step") for f in os.listdir(tmp_path))


def test_generate_layouts_deterministic(tiny_corpus):
    cfg = tiny_train_config()
    trainer = Trainer(cfg, vocab_of_records(tiny_corpus))
    a = trainer.generate_layouts(tiny_corpus[:3], seed=4)
    b = trainer.generate_layouts(tiny_corpus[:3], seed=4)
    assert all(torch.equal(x, y) for x, y in zip(a, b))
