"""SMPP 3.4 wire codec, GSM 03.38 text handling and SMS segmentation."""

from . import gsm0338, pdu, receipts, segmentation

__all__ = ["gsm0338", "pdu", "receipts", "segmentation"]
