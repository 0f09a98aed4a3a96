import pytest

from amlrank.datasets import DatasetError, load_dataset
from amlrank.graph import save_graph, ingest_edge_list


def test_generic_toy(tmp_path, toy_csv):
    save_graph(ingest_edge_list(toy_csv), tmp_path / "g")
    assert load_dataset("Generic", tmp_path / "g").n_nodes == 3


def test_generic_missing(tmp_path):
    with pytest.raises(DatasetError):
        load_dataset("Generic", tmp_path)


def _elliptic(d):
    (d / "AddrAddr_edgelist.csv").write_text(
        "input_address,output_address\na,b\nb,c\nc,d\nd,a\n")
    (d / "wallets_features_classes_combined.csv").write_text(
        "address,Time step,class,feat\na,3,1,0.1\nb,10,2,0.2\nc,42,1,0.3\nd,50,2,0.4\n")


def test_elliptic_time_cutoff_and_labels(tmp_path):
    _elliptic(tmp_path)
    g = load_dataset("EllipticPP", tmp_path)
    assert g.timestamp.max() < 42
    assert g.n_edges == 2
    lab = dict(zip(g.addresses, g.labels.tolist()))
    assert lab["a"] == 1 and lab["b"] == 0
    assert lab["c"] == -1


def test_missing_column_named(tmp_path):
    (tmp_path / "edges.csv").write_text("from_address,value,timestamp\na,1,2\n")
    (tmp_path / "labels.csv").write_text("address,flag\na,1\n")
    with pytest.raises(DatasetError, match="to_address"):
        load_dataset("EthereumFraud", tmp_path)


def test_ethereum_with_column_map(tmp_path):
    (tmp_path / "tx.csv").write_text("from,to,value,timeStamp\na,b,1.5,100\nb,c,2.0,200\n")
    (tmp_path / "labels.csv").write_text("address,flag\na,1\nc,0\n")
    g = load_dataset("EthereumFraud", tmp_path, columns={
        "edges_file": "tx.csv", "src": "from", "dst": "to", "time": "timeStamp"})
    assert g.weight.tolist() == [1.5, 2.0] and g.timestamp.tolist() == [100, 200]
    assert g.labels.tolist() == [1, -1, 0]


def test_wormhole_ignores_node_features(tmp_path):
    feats = ",".join(f"f{i}" for i in range(9))
    (tmp_path / "edges.csv").write_text("source,target,amount,timestamp\nx,y,3,7\n")
    (tmp_path / "nodes.csv").write_text(
        f"address,label,{feats}\nx,1,{','.join('1' * 9)}\ny,0,{','.join('2' * 9)}\n")
    g = load_dataset("Wormhole", tmp_path)
    assert (g.n_nodes, g.n_edges) == (2, 1)
    assert g.labels.tolist() == [1, 0]


def test_unknown_adapter_and_keys(tmp_path):
    with pytest.raises(ValueError):
        load_dataset("Bitcoin", tmp_path)
    with pytest.raises(DatasetError):
        load_dataset("Wormhole", tmp_path, columns={"colour": "x"})
