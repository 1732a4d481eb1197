"""bkvg: maximally accretive extensions of two sectorial Hardy-type model
families on L2(0,1), with every closed-form constant certified by an
independent numerical oracle.

The name abbreviates Birman-Krein-Vishik-Grubb, the classical extension
theory whose accretive variant this package implements for two model
families: +/-i*gamma/x^2 - d^2/dx^2 (imaginary Hardy potential) and
+/-i*d^2/dx^2 + gamma/x^2 (imaginary Laplacian with real Hardy potential).
"""

__version__ = "0.1.0"
