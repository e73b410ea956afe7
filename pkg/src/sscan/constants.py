"""
Constants for the sscan package.
"""

# Architecture defaults
DEFAULT_K = 4
DEFAULT_OVERLAP = 2
DEFAULT_N_SSAB = 10
DEFAULT_TRUNK_CHANNELS = 64
DEFAULT_GROUP_CHANNELS = 16
DEFAULT_REDUCTION = 4
DEFAULT_SPATIAL_KERNEL = 7

# ADAM and learning-rate schedule
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8
DEFAULT_LR = 1e-4
DEFAULT_DECAY_EPOCH = 50
DEFAULT_DECAY_FACTOR = 10.0

# Training data
DEFAULT_BATCH_SIZE = 16
DEFAULT_PATCH_SIZE = 40
DEFAULT_PATCHES_PER_EPOCH = 2000
DEFAULT_SIGMA = 25.0
NOISE_SIGMAS = (5.0, 25.0, 50.0, 75.0)
INTENSITY_LEVELS = 255.0

# Data preparation; rows of the Washington DC Mall cube used for training
DEFAULT_TRAIN_ROWS = 1080

# Inference
DEFAULT_TILE = 200
DEFAULT_MARGIN = 16

# Metrics
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
PEAK_VALUE = 1.0

# Visualization; the false-colour triple of the Washington DC Mall figures
DEFAULT_BAND_TRIPLE = (57, 27, 17)

# Gradient checking
GRADCHECK_STEP = 1e-5
GRADCHECK_TOLERANCE = 1e-4

# CLI exit codes
EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4
EXIT_INVALID = 5
