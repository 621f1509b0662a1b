from beamsync.cli import exec_cli

if __name__ == '__main__':
    exec_cli()
