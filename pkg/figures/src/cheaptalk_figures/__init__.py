"""Figure scripts over cheap-talk experiment CSV artifacts."""
