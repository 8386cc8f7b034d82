"""Command-line front end producing the comb and sensitivity CSV artifacts."""
