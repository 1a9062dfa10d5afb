import pytest

from logoforge.corpus import SynthConfig, generate_synthetic_corpus, vocab_of_records
from logoforge.training import TrainConfig, Trainer


def tiny_train_config(**overrides) -> TrainConfig:
    base = dict(
        lambda_ol=10.0, batch_size=8, epochs=1, seed=0,
        d_v=16, d_e=8, d_c=16, d_z=8, gen_hidden=16,
        seq_hidden=16, img_base=8, tile_channels=8,
        checkpoint_every=1, fid_every=0,
    )
    base.update(overrides)
    return TrainConfig(**base)


@pytest.fixture(scope="session")
def tiny_corpus():
    return generate_synthetic_corpus(SynthConfig(n_records=16), seed=11)


@pytest.fixture(scope="session")
def small_synth_corpus():
    return generate_synthetic_corpus(SynthConfig(n_records=48), seed=5)


@pytest.fixture(scope="session")
def session_checkpoint(tmp_path_factory, tiny_corpus):
    out = tmp_path_factory.mktemp("session_ckpt")
    trainer = Trainer(tiny_train_config(epochs=1), vocab_of_records(tiny_corpus),
                      out_dir=str(out))
    trainer.fit(tiny_corpus)
    return str(out / "checkpoint_final.pt")
