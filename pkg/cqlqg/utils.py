import sys
import time
import numpy as np
from colorama import Fore, Style
from datetime import datetime as dt


def display(*msgs: str, color: str = "white", timestamp: bool = True, stream=None):
    try:
        fg_color = getattr(Fore, color.upper())
    except AttributeError:
        fg_color = Fore.WHITE
    if stream is None:
        stream = sys.stdout
    msg = fg_color
    if timestamp:
        msg += f"[{dt.today().strftime('%y-%m-%d %H:%M:%S')}] - "
    msg += f"{''.join(msgs)}\n"
    msg += Style.RESET_ALL
    stream.write(msg)
    stream.flush()


def timeit(msg):
    def decorator(func):
        def wrapper(*args, **kwargs):
            ts = time.time()
            result = func(*args, **kwargs)
            te = time.time()
            display(f"{msg} : {te-ts:.3}s")
            return result

        return wrapper

    return decorator


def JSONConverter(obj):
    if isinstance(obj, dt):
        return obj.__str__()
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return [[float(z.real), float(z.imag)] for z in obj.ravel()]
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()


def jsonify(data):
    """Jsonifies the numpy arrays inside a result dictionary, mostly for saving and pretty printing"""
    jsonified = {}

    for key, value in data.items():
        if isinstance(value, list):
            value = [jsonify(item) if isinstance(item, dict) else item for item in value]
        if isinstance(value, dict):
            value = jsonify(value)
        if type(value).__module__ == "numpy":
            value = JSONConverter(value)
        jsonified[key] = value

    return jsonified


def format_complex(z: complex, digits: int = 4) -> str:
    """Formats an eigenvalue the way the worked examples quote them, e.g. -0.0245+0.1019i"""
    sign = "+" if z.imag >= 0 else "-"
    return f"{z.real:.{digits}f}{sign}{abs(z.imag):.{digits}f}i"
