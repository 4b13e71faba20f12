"""Domain - Numerical core: circle quadrature, graphs, dynamics, measures and rate functions"""
