# Triplet Layout - scene graph embeddings with triplet supervision
