def uniq(xs):
    return {x for x in xs}
