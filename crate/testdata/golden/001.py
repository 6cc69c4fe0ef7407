def words(content):
    return [part for part in content.split(' ') if part]
