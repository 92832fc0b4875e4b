"""Campus PC-to-phone announcer: bulk SMS/email notifications with an
approval workflow, dispatched through an SMPP 3.4 gateway."""

__version__ = "0.1.0"
