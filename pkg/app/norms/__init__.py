# Norm engine package