"""Structure-based Sybil detection with prior-augmented loopy belief propagation."""
