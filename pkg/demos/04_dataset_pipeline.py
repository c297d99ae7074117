"""
From raw files to sliding windows
=================================

Run with ``TENSORGCN_DATA`` pointing at a directory that holds the SNAP
bitcoin files (soc-sign-bitcoinotc.csv or soc-sign-bitcoinalpha.csv, gzip
is fine). Prints the dataset statistics, the window layout and the spectral
bound on the symmetrized training window.
"""
import os
import sys

from tensorgcn.data import DATASETS, SplitSpec, find_dataset, load_graph, make_windows
from tensorgcn.verify import dataset_bound

root = os.environ.get("TENSORGCN_DATA")
if not root:
    sys.exit("set TENSORGCN_DATA to the directory holding the dataset files")

kind = sys.argv[1] if len(sys.argv) > 1 else "bitcoin_otc"
g = load_graph(kind, find_dataset(kind, root))
print(kind, g.stats(), "reference (nodes, edges, T):", DATASETS[kind].reference)

split = SplitSpec(*DATASETS[kind].split)
data = make_windows(g, split)
off = split.offsets()
for name, start, edges in zip(("train", "val", "test"), off,
                              (data.train_edges, data.val_edges, data.test_edges)):
    print(f"{name}: slices {start + 1}..{start + split.s_train}, {len(edges)} labeled edges")

# dense eigensolves on ~7k nodes are slow; restrict to the 2000 busiest nodes
print(dataset_bound(kind, g, split.s_train, bandwidth=20, max_nodes=2000).line())
