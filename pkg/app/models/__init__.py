# Models package