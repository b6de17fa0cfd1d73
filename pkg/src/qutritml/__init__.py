"""Qutrit quantum machine learning on an exact state-vector simulator.

Gell-Mann rotation feature maps, a fidelity quantum kernel with an SMO-trained
SVM, and a data re-uploading qutrit classifier trained with RMSProp.
"""
__version__ = "0.1.0"
