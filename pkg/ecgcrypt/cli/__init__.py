"""
ecgcrypt has a command line interface to run the secure ECG pipeline on files.

Example
-------
Synthesize a minute of ECG, train a classifier and stream the recording
through encryption, framing, decryption and beat classification::

    $ ecgcrypt -h
    $ ecgcrypt synth --seconds 60 --bpm 72 --seed 1 -o ecg.bin
    $ ecgcrypt train --seed 7 --epochs 20 -o weights.json
    $ ecgcrypt -v stream -i ecg.bin -w weights.json

Encrypt a recording into frames and recover it::

    $ ecgcrypt encrypt -i ecg.bin -o ecg.ecgx --x0 0.5 --r 3.99
    $ ecgcrypt decrypt -i ecg.ecgx -o recovered.bin --x0 0.5 --r 3.99

Run the security tests and write plot data::

    $ ecgcrypt audit -i ecg.bin --report report.json
    $ ecgcrypt plot -i ecg.bin -o plots/

Configure the key
-----------------
The key is the initial state ``x0`` in (0, 1) and the growth rate ``r`` in
(3.57, 4.0] of the logistic map, given as decimal text. Instead of passing the
secret state on the command line you can set the environment variable
``ECGCRYPT_X0``::

    $ export ECGCRYPT_X0=0.3141592653

An explicit ``--x0`` always wins over the environment.

Configure logging
-----------------
Diagnostics go to stderr. Use ``-v`` for one line per processed segment and
``-vv`` for debug output, or set the default level with ``ECGCRYPT_LOG_LEVEL``::

    $ export ECGCRYPT_LOG_LEVEL=INFO
"""
