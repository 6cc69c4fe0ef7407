def slugify(path):
    return path.replace(' ', '_')
