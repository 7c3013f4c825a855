from importlib import import_module
from queue import Queue, Empty
from threading import Thread
from typing import Union, Any, Optional, Iterable, Tuple, Callable, List

import numpy as np


def import_callable(ref: Union[str, Callable]) -> Callable:
    """
    Resolves a `package.module.name` reference of a python-kind field. Callables are returned as is.
    """
    if callable(ref):
        return ref
    if not isinstance(ref, str) or '.' not in ref:
        raise ImportError('Invalid import path `%s`' % ref)

    module_name, name = ref.rsplit('.', 1)
    obj = getattr(import_module(module_name), name, None)
    if not callable(obj):
        raise ImportError('`%s` is not a callable' % ref)
    return obj


def int_ranges(items: Iterable[int]) -> List[Tuple[int, int]]:
    """
    Groups interval indexes into maximal runs of consecutive integers
    :param items: Indexes in any order, duplicates allowed
    :return: List of (first, last) pairs
    """
    idx = np.unique(np.fromiter(items, dtype=int))
    if not len(idx):
        return []
    breaks = np.flatnonzero(np.diff(idx) > 1)
    firsts = np.concatenate([idx[:1], idx[breaks + 1]])
    lasts = np.concatenate([idx[breaks], idx[-1:]])
    return [(int(a), int(b)) for a, b in zip(firsts, lasts)]


def format_ranges(items: Iterable[int]) -> str:
    return ', '.join('%d' % a if a == b else '%d-%d' % (a, b) for a, b in int_ranges(items))


class ExceptionThread(Thread):
    """
    Thread objects, which catches thread exceptions and raises them in main thread
    """
    def __init__(self, *args, **kwargs):
        super(ExceptionThread, self).__init__(*args, **kwargs)
        self.exc = None

    def run(self):
        try:
            return super(ExceptionThread, self).run()
        except Exception as e:
            self.exc = e

    def join(self, timeout=None):
        super(ExceptionThread, self).join(timeout=timeout)
        if self.exc:
            raise self.exc


def exec_in_parallel(func: Callable, tasks: List[Tuple[list, dict]], threads_count: Optional[int] = None) -> List[Any]:
    """
    Executes func for every task in a pool of threads.
    Numpy and scipy release the GIL in their heavy kernels, so threads overlap most of the numeric work.
    :param func: Function to execute in thread. Must be thread safe
    :param tasks: A list of (args, kwargs) for separate function calls
    :param threads_count: Maximum number of parallel threads to run. All tasks run at once if not given
    :return: A list of results in task order, so output never depends on scheduling
    """
    results = [None] * len(tasks)
    queue = Queue()
    for index, task in enumerate(tasks):
        queue.put((index, task))

    threads_count = min(len(tasks), threads_count) if threads_count else len(tasks)

    def _worker():
        while True:
            try:
                index, (args, kwargs) = queue.get_nowait()
            except Empty:
                return
            results[index] = func(*args, **kwargs)

    threads = [ExceptionThread(target=_worker) for _ in range(threads_count)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()

    return results


def exec_multi_arg_func(func: Callable, split_args: Iterable[Any], *args, threads_count: Optional[int] = None,
                        **kwargs) -> List[Any]:
    """
    Executes function in parallel threads. Thread functions (func) receive one of split_args as first argument
    Another arguments passed to functions - args and kwargs
    If len(split_args) <= 1 or threads_count is 1, main thread is used.
    :param func: Function to execute. Must accept split_arg as first parameter
    :param split_args: A list of arguments to split threads by
    :param threads_count: Maximum number of threads to run in parallel
    :return: A list of execution results, in split_args order
    """
    split_args = list(split_args)
    if len(split_args) <= 1 or threads_count == 1:
        return [func(s, *args, **kwargs) for s in split_args]

    tasks = [([s] + list(args), kwargs) for s in split_args]
    return exec_in_parallel(func, tasks, threads_count=threads_count)
