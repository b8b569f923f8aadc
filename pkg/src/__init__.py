# DNLSE Quantum Search
