"""Small simulated setups shared across test modules."""
from otadp.channel import power_from_snr
from otadp.data import gen_synthetic, train_test_split
from otadp.model import LocalHyper, init_model, mlp_shapes
from otadp.protocol import ProtocolSettings, Trainer


def small_trainer(seed=0, K=4, feat=8, hidden=6, classes=4, power=None, snr_db=1.0,
                  keep_trace=False, observer=None, **settings):
    records = gen_synthetic(K, (30, 60), feat, classes, "label_shard", 2, seed)
    clients, test = train_test_split(records, 0.2, seed)
    model = init_model(mlp_shapes(feat, hidden, classes), seed)
    settings.setdefault("hyper", LocalHyper(local_epochs=2, batch_size=16))
    settings.setdefault("rounds", 3)
    st = ProtocolSettings(seed=seed, **settings)
    cap = power if power is not None else power_from_snr(snr_db, model.d, st.sigma_c)
    for c in clients:
        c.power = cap
    return Trainer(model, clients, test, st, keep_trace=keep_trace, observer=observer)
