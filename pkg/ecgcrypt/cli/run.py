import csv
import json
from collections import OrderedDict
from pathlib import Path

import click
import numpy as np

from ecgcrypt import __version__
from ecgcrypt.beats import prepare_beat, read_beats
from ecgcrypt.cipher import MAX_BURN_IN, apply_stream
from ecgcrypt.cli.misc import command_errors, echo_table, make_key, setup_logging, warn
from ecgcrypt.cli.types import GROWTH_RATE, INITIAL_STATE
from ecgcrypt.exceptions import CommandError, DegenerateSegment
from ecgcrypt.inference.dataset import make_template_dataset
from ecgcrypt.inference.model import CLASS_LABELS, DEFAULT_SHAPE, predict_proba, to_class_probs
from ecgcrypt.inference.storage import load_weights, save_weights
from ecgcrypt.inference.train import TrainConfig, train as train_model
from ecgcrypt.ingest import (
    DEFAULT_FS, MIDSCALE, SEGMENT_SIZE, FileSource, SynthConfig, SynthSource, bytes_to_segment, center_array,
    read_signal, rpeaks_path, segment_timestamp, segment_to_bytes, synth_ecg, write_rpeaks, write_signal,
)
from ecgcrypt.pipeline import Pipeline
from ecgcrypt.plotting import render_histogram_svg, render_line_svg, signal_table, write_signal_csv, write_svg
from ecgcrypt.security import histogram256, run_audit, write_report
from ecgcrypt.transport import MAX_PAYLOAD, EncryptedFrame, is_frame, read_frames, write_frames

CONTEXT_SETTINGS = dict(help_option_names=['-h', '--help'])
FRAME_SUFFIX = '.ecgx'
REPORT_SUFFIX = '.report.json'

fs_option = click.option(
    '--fs', type=click.FloatRange(min=0, min_open=True), default=DEFAULT_FS, show_default=True,
    help="Sampling rate in Hz.")
input_option = click.option(
    '--input', '-i', 'input_path', type=click.Path(exists=True, dir_okay=False), required=True,
    help="Input file.")


def key_options(f):
    f = click.option('--burn-in', type=click.IntRange(0, MAX_BURN_IN), default=0, show_default=True,
                     help="Keystream steps discarded after each reset.")(f)
    f = click.option('--r', 'r', type=GROWTH_RATE, default=3.99, show_default=True,
                     help="Growth rate of the logistic map.")(f)
    f = click.option('--x0', type=INITIAL_STATE, envvar='ECGCRYPT_X0', default=0.5, show_default=True,
                     help="Secret initial state. Default from ECGCRYPT_X0.")(f)
    return f


@click.group(context_settings=CONTEXT_SETTINGS)
@click.version_option(version=__version__, prog_name='ecgcrypt')
@click.option('--verbose', '-v', count=True, help="Log to stderr, -vv for debug output.")
def cli(verbose):
    """
    ecgcrypt encrypts ECG recordings with a chaotic stream cipher, classifies
    their beats and audits the cipher output.

    Documentation is available in the package docs (docs/source).
    """
    setup_logging(verbose)


@cli.command()
@click.option('--output', '-o', type=click.Path(dir_okay=False), required=True, help="Signal file to write.")
@click.option('--seconds', type=click.FloatRange(min=0), default=60.0, show_default=True)
@click.option('--bpm', type=float, default=72.0, show_default=True, help="Heart rate in beats per minute.")
@click.option('--noise', type=click.FloatRange(min=0), default=2.0, show_default=True,
              help="Standard deviation of the gaussian noise in counts.")
@click.option('--seed', type=int, default=0, show_default=True)
@fs_option
def synth(output, seconds, bpm, noise, seed, fs):
    """Write a synthetic recording and its R-peak sidecar."""
    with command_errors():
        raw, rpeaks = synth_ecg(SynthConfig(fs, bpm, noise, seed, seconds))
        write_signal(output, raw)
        write_rpeaks(rpeaks_path(output), rpeaks)
    if raw.size == 0:
        warn("empty recording written to {}".format(output))
    click.echo(output)
    click.echo(rpeaks_path(output))
    click.echo("{} samples, {} beats".format(raw.size, rpeaks.size))


def _iter_frames(pipeline, path, errors):
    for item in read_frames(path):
        if is_frame(item):
            yield pipeline.process_frame(item)
        else:
            errors.append(item)


def _segment_line(result):
    if result.skipped:
        return "seq {:d} t={:d}ms skipped latency={:.2f}ms".format(result.seq, result.timestamp_ms, result.latency_ms)
    return "seq {:d} t={:d}ms beats={:d} labels={} latency={:.2f}ms".format(
        result.seq, result.timestamp_ms, len(result.beats), ','.join(result.labels) or '-', result.latency_ms)


def _write_beats_csv(path, beats):
    with open(Path(path), 'w', newline='') as fp:
        writer = csv.writer(fp)
        writer.writerow(['r_index', 'seq', 'label'] + ['p_' + label for label in CLASS_LABELS])
        for beat in beats:
            writer.writerow([beat.r_index, beat.source_seq, beat.label] + ['{:.6f}'.format(p) for p in beat.probs])


@cli.command()
@click.option('--input', '-i', 'input_path', type=click.Path(exists=True, dir_okay=False),
              help="Raw signal file or .ecgx frames. Default: synthetic recording.")
@click.option('--weights', '-w', type=click.Path(exists=True, dir_okay=False), required=True,
              help="Weights file written by the train command.")
@click.option('--output', '-o', type=click.Path(dir_okay=False), help="CSV file of the classified beats.")
@click.option('--report', type=click.Path(dir_okay=False), help="JSON file for the run statistics.")
@click.option('--seconds', type=click.FloatRange(min=0), default=60.0, show_default=True,
              help="Length of the synthetic recording.")
@click.option('--seed', type=int, default=0, show_default=True, help="Noise seed of the synthetic recording.")
@click.option('--paced/--unpaced', default=False, show_default=True, help="Replay files at the sampling rate.")
@click.option('--no-transport', is_flag=True, help="Decrypt the ciphertext without framing it.")
@key_options
@fs_option
def stream(input_path, weights, output, report, seconds, seed, paced, no_transport, x0, r, burn_in, fs):
    """Encrypt, transmit, decrypt and classify a recording segment by segment."""
    key, config = make_key(x0, r, burn_in)
    errors = []
    beats = []
    with command_errors():
        pipeline = Pipeline(key, load_weights(weights, DEFAULT_SHAPE), config, fs, use_transport=not no_transport)
        if input_path and Path(input_path).suffix == FRAME_SUFFIX:
            results = _iter_frames(pipeline, input_path, errors)
        else:
            if input_path:
                source = FileSource(input_path, fs, paced)
            else:
                source = SynthSource(SynthConfig(fs, seed=seed, duration_s=seconds))
            results = pipeline.run(source.segments())
        try:
            for result in results:
                click.echo(_segment_line(result))
                beats.extend(result.beats)
        except KeyboardInterrupt:
            warn("interrupted")

        stats = pipeline.stats.as_dict()
        stats['decode_errors'] = len(errors)
        if output:
            _write_beats_csv(output, beats)
        if report:
            Path(report).write_text(json.dumps(stats, indent=2))

    click.echo("{segments_processed} segments, {beats_classified} beats, latency mean {mean_latency_ms:.2f} ms "
               "max {max_latency_ms:.2f} ms".format(**stats))
    click.echo(' '.join('{}={}'.format(label, count) for label, count in stats['class_counts'].items()))
    if errors:
        warn("{} frame decode errors".format(len(errors)))


@cli.command()
@input_option
@click.option('--output', '-o', type=click.Path(dir_okay=False), required=True, help=".ecgx file to write.")
@click.option('--segment-size', type=click.IntRange(1, MAX_PAYLOAD), default=SEGMENT_SIZE, show_default=True,
              help="Samples per frame; the keystream restarts with every frame.")
@key_options
@fs_option
def encrypt(input_path, output, segment_size, x0, r, burn_in, fs):
    """Encrypt a raw signal file into frames."""
    key, config = make_key(x0, r, burn_in)
    with command_errors():
        plaintext = segment_to_bytes(center_array(read_signal(input_path)))
        frames = [
            EncryptedFrame(seq, segment_timestamp(seq, fs, segment_size),
                           apply_stream(plaintext[i:i + segment_size], key, config))
            for seq, i in enumerate(range(0, len(plaintext), segment_size))
        ]
        write_frames(output, frames)
    click.echo("{} frames written to {}".format(len(frames), output))


@cli.command()
@input_option
@click.option('--output', '-o', type=click.Path(dir_okay=False), required=True, help="Raw signal file to write.")
@key_options
def decrypt(input_path, output, x0, r, burn_in):
    """Recover a raw signal file from frames.

    Frames that fail to decode are reported and left out; the command then exits with an error.
    """
    key, config = make_key(x0, r, burn_in)
    recovered, errors = [], []
    with command_errors():
        for item in read_frames(input_path):
            if is_frame(item):
                recovered.append(apply_stream(item.payload, key, config))
            else:
                errors.append(item)
        raw = (bytes_to_segment(b''.join(recovered)) + MIDSCALE).astype(np.uint8)
        write_signal(output, raw)
    click.echo("{} frames, {} samples written to {}".format(len(recovered), raw.size, output))
    if errors:
        raise CommandError("{} frame decode errors in {}".format(len(errors), input_path))


@cli.command()
@input_option
@click.option('--report', type=click.Path(dir_okay=False),
              help="JSON report to write; histogram CSVs go next to it. Default: <input>.report.json")
@click.option('--segment-size', type=click.IntRange(min=1), default=None,
              help="Restart the keystream every N bytes as the stream does. Default: one continuous keystream.")
@key_options
def audit(input_path, report, segment_size, x0, r, burn_in):
    """Run the security tests on the encryption of a raw signal file."""
    key, config = make_key(x0, r, burn_in)
    report = report or str(input_path) + REPORT_SUFFIX
    with command_errors():
        plaintext = segment_to_bytes(center_array(read_signal(input_path)))
        result = run_audit(key, plaintext, config, segment_size)
        paths = write_report(result, report)
    echo_table(result.summary_rows(), ('Test', 'Measured', 'Published'))
    click.echo('Correlation (decrypted)  {:.12f}'.format(result.decrypted_correlation))
    click.echo('Chi-square  {:.2f} (p={:.4f})'.format(result.chi_square, result.chi_square_p_value))
    for path in paths:
        click.echo(path)


@cli.command()
@click.option('--output', '-o', type=click.Path(dir_okay=False), required=True, help="Weights file to write.")
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--epochs', type=click.IntRange(min=0), default=20, show_default=True)
@click.option('--per-class', type=click.IntRange(min=1), default=40, show_default=True,
              help="Synthetic beats per class.")
@click.option('--batch-size', type=click.IntRange(min=1), default=16, show_default=True)
@click.option('--learning-rate', type=float, default=1e-3, show_default=True)
@click.option('--dropout', type=click.FloatRange(0, 1, max_open=True), default=0.5, show_default=True)
def train(output, seed, epochs, per_class, batch_size, learning_rate, dropout):
    """Train the beat classifier on the synthetic five-class set."""
    with command_errors():
        x, labels = make_template_dataset(per_class, seed)
        config = TrainConfig(learning_rate=learning_rate, epochs=epochs, batch_size=batch_size,
                             dropout_rate=dropout, seed=seed)
        result = train_model(x, labels, config)
        save_weights(result.weights, output)
    click.echo("loss {:.4f} -> {:.4f}".format(result.loss_history[0], result.final_loss))
    click.echo("accuracy {:.4f}".format(result.final_accuracy))
    click.echo(output)


@cli.command()
@click.option('--input', '-i', 'input_path', type=click.Path(exists=True, dir_okay=False), required=True,
              help="Beat file: one beat per line, 180 comma-separated values.")
@click.option('--weights', '-w', type=click.Path(exists=True, dir_okay=False), required=True)
def classify(input_path, weights):
    """Print the label and class probabilities of every beat in a file."""
    with command_errors():
        model = load_weights(weights, DEFAULT_SHAPE)
        beats = read_beats(input_path)
    for i, beat in enumerate(beats):
        try:
            x = prepare_beat(beat)
        except DegenerateSegment as e:
            warn("beat {} skipped: {}".format(i, e))
            continue
        scored = to_class_probs(predict_proba(x, model)[0])
        probs = ' '.join('{}={:.4f}'.format(label, p) for label, p in zip(CLASS_LABELS, scored.probs))
        click.echo("{}: {} {}".format(i, scored.label, probs))


@cli.command()
@input_option
@click.option('--output', '-o', 'output_dir', type=click.Path(file_okay=False), required=True,
              help="Directory for the CSV and SVG files.")
@click.option('--start', type=click.IntRange(min=0), default=0, show_default=True, help="First sample plotted.")
@click.option('--samples', type=click.IntRange(min=1), default=SEGMENT_SIZE, show_default=True,
              help="Number of samples plotted.")
@key_options
@fs_option
def plot(input_path, output_dir, start, samples, x0, r, burn_in, fs):
    """Write raw, filtered, encrypted and decrypted traces and byte histograms."""
    key, config = make_key(x0, r, burn_in)
    out = Path(output_dir)
    stem = Path(input_path).stem
    with command_errors():
        table = signal_table(read_signal(input_path), key, config, fs)
        window = OrderedDict((name, column[start:start + samples]) for name, column in table.items())
        if window['index'].size == 0:
            warn("no samples in [{}, {})".format(start, start + samples))
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / (stem + '_signal.csv')]
        write_signal_csv(paths[0], window)
        traces = OrderedDict((name, window[name]) for name in ('raw', 'filtered', 'encrypted', 'decrypted'))
        paths.append(write_svg(out / (stem + '_signal.svg'), render_line_svg(traces, title=stem)))
        for name in ('encrypted', 'decrypted'):
            counts = histogram256(table[name].astype(np.uint8))
            svg = render_histogram_svg(counts, title='{} {}'.format(stem, name))
            paths.append(write_svg(out / '{}_hist_{}.svg'.format(stem, name), svg))
    for path in paths:
        click.echo(path)
