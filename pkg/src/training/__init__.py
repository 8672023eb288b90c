# Training loop, optimizers, metrics and layout composition
