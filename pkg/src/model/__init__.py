# Graph convolution, prediction heads, reverse-mode tape and checkpoints
