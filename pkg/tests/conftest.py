import numpy as np
import pytest

DAY = 86_400


def synthetic_bitcoin(path, num_nodes=40, num_steps=12, per_step=30, seed=0, t0=1_300_000_000):
    """SNAP-style bitcoin CSV: edges into 'bad' nodes are mostly rated negatively."""
    rng = np.random.default_rng(seed)
    bad = set(range(1, num_nodes + 1, 5))
    lines = []
    for step in range(num_steps):
        for k in range(per_step):
            s, d = rng.choice(np.arange(1, num_nodes + 1), size=2, replace=False)
            neg = (d in bad) == (rng.random() < 0.9)
            rating = -int(rng.integers(1, 11)) if neg else int(rng.integers(1, 11))
            ts = t0 + step * 14 * DAY + (rng.uniform(0, 14 * DAY - 1) if step or k else 0.0)
            lines.append(f"{s},{d},{rating},{ts:.5f}")
    path.write_text("\n".join(lines) + "\n")
    return path


def synthetic_chess(path, num_players=30, num_steps=12, per_step=25, seed=0, t0=1_000_000_000):
    rng = np.random.default_rng(seed)
    strength = rng.standard_normal(num_players + 1)
    lines = ["% sym weighted", "% 300 30 30"]
    for step in range(num_steps):
        for k in range(per_step):
            w, b = rng.choice(np.arange(1, num_players + 1), size=2, replace=False)
            gap = strength[w] - strength[b]
            result = 1 if gap > 0.5 else (-1 if gap < -0.5 else 0)
            ts = t0 + step * 31 * DAY + (int(rng.integers(0, 31 * DAY)) if step or k else 0)
            lines.append(f"{w} {b} {result} {ts}")
    path.write_text("\n".join(lines) + "\n")
    return path


def synthetic_reddit(path, seed=0, t0="2014-01-01"):
    rng = np.random.default_rng(seed)
    subs = [f"sub{k}" for k in range(12)] + ["rare"]
    lines = ["SOURCE_SUBREDDIT\tTARGET_SUBREDDIT\tPOST_ID\tTIMESTAMP\tLINK_SENTIMENT\tPROPERTIES"]
    base = np.datetime64(t0 + "T00:00:00")
    for k in range(400):
        s, d = rng.choice(12, size=2, replace=False)
        ts = base + np.timedelta64(int(k * 3600 * 8), "s")
        sent = -1 if rng.random() < 0.2 else 1
        lines.append(f"{subs[s]}\t{subs[d]}\tp{k}\t{str(ts).replace('T', ' ')}\t{sent}\t0.1,0.2")
    lines.append(f"rare\tsub0\tpx\t{t0} 05:00:00\t1\t0.1")
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def bitcoin_file(tmp_path):
    return synthetic_bitcoin(tmp_path / "soc-sign-bitcoinotc.csv")


@pytest.fixture
def chess_file(tmp_path):
    return synthetic_chess(tmp_path / "out.chess")


@pytest.fixture
def reddit_file(tmp_path):
    return synthetic_reddit(tmp_path / "soc-redditHyperlinks-body.tsv")
