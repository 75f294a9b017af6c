# Finite element building blocks: quadrature, bases, assembly
