# Embedding collection, separability probe, clustering and exports
