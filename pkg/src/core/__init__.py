# Shared types, geometry, vocabulary and RNG
