# Experiment harness package