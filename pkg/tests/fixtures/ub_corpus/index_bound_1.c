int u[3];
int main() {
  u[5] = 0;
  printf("%d\n", u[0]);
  return 0;
}
