# Norm Synthesis package