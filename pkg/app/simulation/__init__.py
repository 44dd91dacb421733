# Simulation package