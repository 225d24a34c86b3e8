from multiprocessing import Pool, cpu_count


def default_processes():
    return max(1, cpu_count() - 1)  # Leave one core free


def parallel_map(func, items, processes=None):
    """Map ``func`` over independent jobs with a process pool.

    ``func`` must be a module-level function; ``processes=1`` (or a single
    job) runs in-process so results stay identical to the pooled path.
    """
    items = list(items)
    if processes is None:
        processes = default_processes()
    processes = min(int(processes), len(items))
    if processes <= 1:
        return [func(item) for item in items]
    with Pool(processes=processes) as pool:
        return pool.map(func, items)
